try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.common.exceptions.spectral_exceptions import ConfigurationError
from app.dto.experiment_dto import ExperimentConfig
from app.dto.kernel_dto import KernelConfig


def _errors(e: ValidationError) -> list[dict[str, Any]]:
    return [
        {"loc": list(error["loc"]), "msg": error["msg"]}
        for error in e.errors(include_url=False)
    ]


def parse_experiment_config(data: dict[str, Any]) -> ExperimentConfig:
    """
    Function validates a raw configuration mapping.
    Args:
        data (dict[str, Any]): sections kernel, initial_condition, solver, experiment
    Returns:
        ExperimentConfig: validated configuration
    Raises:
        ConfigurationError: if any section is invalid
    """

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(
            "Invalid experiment configuration",
            _input={"sections": sorted(data)},
            _detail={"errors": _errors(e)},
        )


def read_toml(config_path: Path) -> dict[str, Any]:

    try:
        with open(config_path, "rb") as fin:
            data = tomllib.load(fin)
    except FileNotFoundError as e:
        raise ConfigurationError(
            "Configuration file not found",
            _input={"config_path": str(config_path)},
            _detail={"error": repr(e)},
        )
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(
            "Configuration file is not valid TOML",
            _input={"config_path": str(config_path)},
            _detail={"error": str(e)},
        )
    return data


def load_experiment_config(config_path: Path | str) -> ExperimentConfig:
    """
    Function reads and validates a TOML experiment configuration.
    Args:
        config_path (Path | str): path to the TOML file
    Returns:
        ExperimentConfig: validated configuration, relative paths resolved against the file
    Raises:
        ConfigurationError: if the file is missing, not TOML or invalid
    """

    config_path = Path(config_path)
    config = parse_experiment_config(read_toml(config_path))
    path = config.initial_condition.path
    if path is not None and not path.is_absolute():
        initial_condition = config.initial_condition.model_copy(
            update={"path": config_path.parent / path}
        )
        config = config.model_copy(update={"initial_condition": initial_condition})
    return config


def validate_ladder(config: ExperimentConfig) -> tuple[tuple[int, ...], int]:
    """
    Function checks that a configuration describes a convergence ladder.
    Args:
        config (ExperimentConfig): experiment configuration
    Returns:
        tuple[tuple[int, ...], int]: the orders and the reference order
    Raises:
        ConfigurationError: if the ladder or reference order is missing
    """

    experiment = config.experiment
    if experiment.ladder is None or experiment.reference_order is None:
        raise ConfigurationError(
            "Convergence needs experiment.ladder and experiment.reference_order",
            _input={
                "ladder": experiment.ladder,
                "reference_order": experiment.reference_order,
            },
            _detail=None,
        )
    return experiment.ladder, experiment.reference_order


def load_kernel_config(config_path: Path | str) -> KernelConfig:
    """
    Function reads the [kernel] section of a TOML configuration.
    Args:
        config_path (Path | str): path to the TOML file
    Returns:
        KernelConfig: validated kernel configuration with resolved node counts
    Raises:
        ConfigurationError: if the section is missing or invalid
    """

    data = read_toml(Path(config_path))
    if "kernel" not in data:
        raise ConfigurationError(
            "Configuration has no [kernel] section",
            _input={"config_path": str(config_path)},
            _detail={"sections": sorted(data)},
        )
    try:
        return KernelConfig.model_validate(data["kernel"])
    except ValidationError as e:
        raise ConfigurationError(
            "Invalid kernel configuration",
            _input={"config_path": str(config_path)},
            _detail={"errors": _errors(e)},
        )
