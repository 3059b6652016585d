from pathlib import Path

from iduconfig import Config


class AppSettings:
    """
    Process level settings read from environment / .env through IDUConfig.
    Attributes:
        config (Config): configuration instance from IDUConfig Config class
    """

    DEFAULTS: dict[str, str] = {
        "KERNEL_CACHE_DIR": "__cache__/kernels",
        "LOG_LEVEL": "INFO",
        "LOG_FILE": ".log",
        "PROMETHEUS_PORT": "",
    }

    def __init__(self, config: Config | None = None) -> None:

        self.config = Config() if config is None else config

    def get(self, key: str) -> str:
        """
        Function returns setting value or its documented default
        Args:
            key (str): setting name
        Returns:
            str: setting value, the default when the key is unset
        """

        try:
            value = self.config.get(key)
        except KeyError:
            value = None
        if value in (None, ""):
            return self.DEFAULTS.get(key, "")
        return str(value)

    @property
    def kernel_cache_dir(self) -> Path:
        return Path(self.get("KERNEL_CACHE_DIR"))

    @property
    def log_level(self) -> str:
        return self.get("LOG_LEVEL").upper()

    @property
    def log_file(self) -> str | None:
        return self.get("LOG_FILE") or None

    @property
    def prometheus_port(self) -> int | None:
        port = self.get("PROMETHEUS_PORT")
        return int(port) if port else None
