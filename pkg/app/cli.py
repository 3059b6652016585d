"""
Command line experiment runner.

    python -m app build-kernel --config kernel.toml --out table.bkmt
    python -m app run --config bkw_decay.toml --out results/bkw.csv
    python -m app convergence --config convergence.toml --out results/ladder.csv

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 assertion failure.
"""

import argparse
import asyncio
import sys
from pathlib import Path
from typing import Awaitable, Callable, Sequence

from loguru import logger

from app.common.exceptions.spectral_exceptions import SpectralError
from app.common.experiments.experiments_service import ExperimentsService
from app.common.logs.loging import init_logger
from app.common.settings import AppSettings
from app.common.storage.models.kernel_caching_service import KernelCachingService
from app.common.validators.config_validators import (
    load_experiment_config,
    load_kernel_config,
)

EXIT_OK = 0
EXIT_NUMERICAL = 3


def _service(settings: AppSettings) -> ExperimentsService:
    return ExperimentsService(
        KernelCachingService(Path().absolute() / settings.kernel_cache_dir)
    )


def _execute(action: Callable[[ExperimentsService], Awaitable[object]]) -> int:

    try:
        asyncio.run(action(_service(AppSettings())))
    except SpectralError as e:
        logger.error(f"{e.__class__.__name__}: {e.msg} | input={e.input} detail={e.detail}")
        return e.exit_code
    except Exception as e:
        logger.exception(e)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_build_kernel(config_path: Path | str, cache_path: Path | str | None) -> int:
    """
    Function builds and writes a kernel table
    Args:
        config_path (Path | str): TOML file with a [kernel] section
        cache_path (Path | str | None): destination of the table, the cache dir when None
    Returns:
        int: exit status
    """

    async def action(service: ExperimentsService) -> None:
        config = load_kernel_config(config_path)
        summary = await service.build_kernel(
            config, None if cache_path is None else Path(cache_path)
        )
        print(
            f"{summary.path}: worst refinement discrepancy "
            f"{summary.refinement_discrepancy:.3e} at {summary.worst_pair}"
        )

    return _execute(action)


def cmd_run(config_path: Path | str, output_path: Path | str) -> int:
    """
    Function runs one experiment and writes <out> (CSV) and <out>.json
    """

    async def action(service: ExperimentsService) -> None:
        config = load_experiment_config(config_path)
        await service.run(config, Path(output_path))

    return _execute(action)


def cmd_convergence(config_path: Path | str, output_path: Path | str) -> int:

    async def action(service: ExperimentsService) -> None:
        config = load_experiment_config(config_path)
        await service.convergence(config, Path(output_path))

    return _execute(action)


def build_parser() -> argparse.ArgumentParser:

    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="Equilibrium preserving spectral Boltzmann solver experiments",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("build-kernel", "compute and cache a kernel table"),
        ("run", "integrate one configured initial datum"),
        ("convergence", "run the N-ladder against the reference order"),
    ):
        sub = verbs.add_parser(verb, help=help_text)
        sub.add_argument("--config", required=True, type=Path, help="TOML configuration")
        sub.add_argument(
            "--out", required=verb != "build-kernel", type=Path, help="output file"
        )
        sub.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    return parser


def main(argv: Sequence[str] | None = None) -> int:

    args = build_parser().parse_args(argv)
    settings = AppSettings()
    init_logger(args.log_level or settings.log_level, settings.log_file)
    match args.verb:
        case "build-kernel":
            return cmd_build_kernel(args.config, args.out)
        case "run":
            return cmd_run(args.config, args.out)
        case "convergence":
            return cmd_convergence(args.config, args.out)
    return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
