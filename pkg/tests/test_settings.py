from pathlib import Path

import pytest

from app.common.settings import AppSettings


class MappingConfig:
    def __init__(self, values: dict[str, str]) -> None:
        self.values = values

    def get(self, key: str) -> str:
        return self.values[key]


class BrokenConfig:
    def get(self, key: str) -> str:
        raise RuntimeError("env file is unreadable")


def test_settings_read_values_and_fall_back_to_defaults():
    settings = AppSettings(MappingConfig({"LOG_LEVEL": "debug", "PROMETHEUS_PORT": "9100"}))
    assert settings.log_level == "DEBUG"
    assert settings.prometheus_port == 9100
    assert settings.kernel_cache_dir == Path("__cache__/kernels")
    assert settings.log_file == ".log"


def test_empty_values_use_defaults():
    settings = AppSettings(MappingConfig({"LOG_FILE": "", "PROMETHEUS_PORT": ""}))
    assert settings.log_file == ".log"
    assert settings.prometheus_port is None


def test_config_failures_are_not_swallowed():
    settings = AppSettings(BrokenConfig())
    with pytest.raises(RuntimeError):
        settings.log_level
