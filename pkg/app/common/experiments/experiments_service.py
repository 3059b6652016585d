import asyncio
import time
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    AssertionFailure,
    BlowUpError,
    SpectralError,
)
from app.common.metrics.metrics import RUN_FAILURES, RUN_SECONDS
from app.common.storage.models.kernel_caching_service import KernelCachingService
from app.common.validators.config_validators import validate_ladder
from app.dto.experiment_dto import (
    ConvergenceRow,
    ConvergenceSummary,
    DecayFit,
    ExperimentConfig,
    KernelBuildSummary,
    RunSummary,
    SolverConfig,
)
from app.dto.kernel_dto import KernelConfig
from app.spectral.collision import perturbation_norm
from app.spectral.equilibrium import split
from app.spectral.initial_conditions import InitialDatum, build_initial_condition
from app.spectral.kernel import HASH_SIZE, KernelTable, save_table
from app.spectral.solver import (
    BoltzmannSolver,
    RunResult,
    bkw_error,
    bkw_residual,
    fit_decay,
)
from app.spectral.spectral_core import NormKind, SpectralField, VelocityGrid, norm, pad

CSV_FLOAT_FORMAT = "%.17g"
BKW_RESIDUAL_TIMES = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
SOBOLEV_BASELINE_FRACTION = 0.1


def records_frame(result: RunResult, dim: int) -> pd.DataFrame:
    """
    Function converts run records into the CSV table
    Args:
        result (RunResult): finished or partial run
        dim (int): velocity dimension
    Returns:
        pd.DataFrame: columns t, rho, ux, uy[, uz], T, g_L1, g_L2, g_Linf, f0_re, f0_im,
            entropy, min_grid_value
    """

    velocity_columns = ["ux", "uy", "uz"][:dim]
    rows = []
    for r in result.records:
        row = {"t": r.t, "rho": r.moments.rho}
        row.update(dict(zip(velocity_columns, r.moments.u)))
        row.update(
            {
                "T": r.moments.T,
                "g_L1": r.g_norm_L1,
                "g_L2": r.g_norm_L2,
                "g_Linf": r.g_norm_Linf,
                "f0_re": r.f0_coeff.real,
                "f0_im": r.f0_coeff.imag,
                "entropy": np.nan if r.entropy is None else r.entropy,
                "min_grid_value": r.min_grid_value,
            }
        )
        rows.append(row)
    columns = ["t", "rho", *velocity_columns, "T", "g_L1", "g_L2", "g_Linf"]
    columns += ["f0_re", "f0_im", "entropy", "min_grid_value"]
    return pd.DataFrame(rows, columns=columns)


def truncation_reason(e: SpectralError) -> str:
    return "blow-up" if isinstance(e, BlowUpError) else e.__class__.__name__


def write_csv(
    frame: pd.DataFrame,
    path: Path,
    truncated_at: float | None = None,
    reason: str = "blow-up",
) -> Path:

    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    if truncated_at is not None:
        with open(path, "a") as fout:
            fout.write(f"# truncated: {reason} at t={truncated_at!r}\n")
    return path


def _max_drift(values: list[float]) -> float:
    return float(max(abs(v - values[0]) for v in values)) if values else 0.0


def _sobolev_growth(result: RunResult) -> dict[str, float]:

    records = result.records
    baseline = records[: max(1, int(np.ceil(SOBOLEV_BASELINE_FRACTION * len(records))))]
    growth = {}
    for name, attribute in (("H1", "h1_norm"), ("H2", "h2_norm")):
        reference = max(getattr(r, attribute) for r in baseline)
        peak = max(getattr(r, attribute) for r in records)
        growth[name] = float(peak / reference) if reference > 0 else float("inf")
    return growth


def summarize(result: RunResult, config: ExperimentConfig, order: int) -> RunSummary:
    """
    Function condenses a run into its JSON summary (without fit or assertions)
    """

    records = result.records
    dim = config.kernel.dim
    f0 = [r.f0_coeff for r in records]
    momentum_drift = max(
        _max_drift([r.conserved.momentum[j] for r in records]) for j in range(dim)
    )
    return RunSummary(
        scheme=result.scheme,
        dim=dim,
        order=order,
        steps=config.solver.steps,
        completed=result.completed,
        blow_up_time=result.blow_up_time,
        failure=result.failure,
        dt=config.solver.dt,
        dt_ceiling=result.dt_ceiling,
        runtime_seconds=result.runtime_seconds,
        final_moments=records[-1].moments.to_dict(),
        initial_mass_mode=[f0[0].real, f0[0].imag],
        max_g_l1=max(r.g_norm_L1 for r in records),
        terminal_g_l1=records[-1].g_norm_L1,
        initial_g_l1=records[0].g_norm_L1,
        max_mass_drift=float(max(abs(c - f0[0]) for c in f0)),
        max_momentum_drift=momentum_drift,
        max_energy_drift=_max_drift([r.conserved.energy for r in records]),
        max_sobolev_growth=_sobolev_growth(result),
    )


def check_run_assertions(config: ExperimentConfig, summary: RunSummary) -> dict[str, bool]:
    """
    Function evaluates the configured assertions of a run
    Args:
        config (ExperimentConfig): configuration with the experiment section
        summary (RunSummary): run summary
    Returns:
        dict[str, bool]: assertion name -> passed, only configured assertions
    """

    e = config.experiment
    fit = summary.fit
    checks: dict[str, bool] = {}
    if e.max_g_l1 is not None:
        checks["max_g_l1"] = summary.max_g_l1 < e.max_g_l1
    if e.min_decay_rate is not None:
        checks["min_decay_rate"] = fit is not None and fit.decay_rate > e.min_decay_rate
    if e.min_r_squared is not None:
        checks["min_r_squared"] = fit is not None and fit.r_squared > e.min_r_squared
    if e.max_decay_ratio is not None:
        checks["max_decay_ratio"] = (
            summary.initial_g_l1 > 0
            and summary.terminal_g_l1 < e.max_decay_ratio * summary.initial_g_l1
        )
    if e.max_mass_drift is not None:
        checks["max_mass_drift"] = summary.max_mass_drift < e.max_mass_drift
    if e.assert_long_time_contrast:
        checks["long_time_contrast"] = (
            summary.classical_terminal_g_l1 is not None
            and summary.classical_terminal_g_l1 > summary.terminal_g_l1
        )
    if e.bkw_residual_tolerance is not None:
        checks["bkw_residual"] = (
            summary.bkw_residual is not None
            and summary.bkw_residual < e.bkw_residual_tolerance
        )
    if e.bkw_error_tolerance is not None:
        checks["bkw_error"] = (
            summary.bkw_terminal_error is not None
            and summary.bkw_terminal_error < e.bkw_error_tolerance
        )
    return checks


def _ratios(errors: list[float]) -> list[float]:
    return [a / b if b > 0 else float("inf") for a, b in zip(errors, errors[1:])]


def _accelerating(ratios: list[float]) -> bool:
    return all(r > 1 for r in ratios) and all(b > a for a, b in zip(ratios, ratios[1:]))


def _raise_on_failed(checks: dict[str, bool], out: Path | None) -> None:

    failed = [name for name, passed in checks.items() if not passed]
    if failed:
        logger.error(f"Assertions failed: {failed}")
        raise AssertionFailure(
            "Experiment assertions failed",
            _input={"out": None if out is None else str(out)},
            _detail={"failed": failed, "assertions": checks},
        )
    if checks:
        logger.info(f"All {len(checks)} assertions passed")


class ExperimentsService:
    """
    Class runs the configured experiments: kernel builds, single runs and N-ladders.
    Attributes:
        kernel_caching_service (KernelCachingService): kernel table cache
    """

    def __init__(self, kernel_caching_service: KernelCachingService) -> None:

        self.kernel_caching_service = kernel_caching_service

    async def build_kernel(
        self, config: KernelConfig, out: Path | None = None
    ) -> KernelBuildSummary:
        """
        Function builds a kernel table, caches it and optionally writes it to out
        Args:
            config (KernelConfig): kernel configuration
            out (Path | None): extra destination of the cache file
        Returns:
            KernelBuildSummary: build metadata with the refinement discrepancy
        """

        table = await self.kernel_caching_service.build_table(config)
        path = await self.kernel_caching_service.cache_table(table)
        if out is not None:
            path = await asyncio.to_thread(save_table, table, out)
        payload_hash = path.read_bytes()[-HASH_SIZE:].hex()
        logger.info(
            f"Kernel table written to {path}, worst refinement discrepancy "
            f"{table.refinement_discrepancy:.3e} at {table.worst_pair}"
        )
        return KernelBuildSummary(
            path=str(path),
            config_hash=table.checksum.hex(),
            dim=config.dim,
            order=config.order,
            radial_nodes=config.radial_nodes,
            angular_nodes_q=config.angular_nodes_q,
            angular_nodes_omega=config.angular_nodes_omega,
            refinement_discrepancy=table.refinement_discrepancy,
            worst_pair=None if table.worst_pair is None else list(table.worst_pair),
            payload_sha256=payload_hash,
        )

    @staticmethod
    def grid_for(config: ExperimentConfig, order: int) -> VelocityGrid:

        dim = config.kernel.dim
        if config.experiment.grid_points is not None:
            grid = VelocityGrid(dim, config.experiment.grid_points)
            grid.check_order(order)
            return grid
        return VelocityGrid.for_order(dim, order)

    async def _solve(
        self,
        table: KernelTable,
        grid: VelocityGrid,
        solver_config: SolverConfig,
        datum: InitialDatum,
    ) -> RunResult:

        solver = BoltzmannSolver(table, grid, solver_config)
        try:
            result = await asyncio.to_thread(solver.run, datum.field, datum.moments)
        except SpectralError as e:
            if e.partial is not None:
                RUN_FAILURES.labels(error_type=e.__class__.__name__).inc()
            raise
        RUN_SECONDS.labels(scheme=solver_config.scheme).observe(result.runtime_seconds)
        return result

    async def run(self, config: ExperimentConfig, out: Path | None = None) -> RunSummary:
        """
        Function integrates the configured initial datum and evaluates assertions
        Args:
            config (ExperimentConfig): experiment configuration
            out (Path | None): CSV destination, the JSON summary goes to <out>.json
        Returns:
            RunSummary: run summary
        Raises:
            SpectralError: numerical failure during the run (BlowUpError,
                NonPhysicalStateError), after writing the partial CSV with a truncation marker
            AssertionFailure: after writing all outputs
        """

        order = config.kernel.order
        grid = self.grid_for(config, order)
        table, _ = await self.kernel_caching_service.get_table(config.kernel)
        datum = build_initial_condition(
            config.initial_condition, config.kernel.dim, order, grid
        )
        try:
            result = await self._solve(table, grid, config.solver, datum)
        except SpectralError as e:
            if out is not None and e.partial is not None:
                write_csv(
                    records_frame(e.partial, grid.dim),
                    out,
                    truncated_at=e.t,
                    reason=truncation_reason(e),
                )
                summary = summarize(e.partial, config, order)
                Path(f"{out}.json").write_text(summary.model_dump_json(indent=2))
            raise
        summary = summarize(result, config, order)

        window = config.experiment.fit_window
        try:
            fit = fit_decay(result.records, window)
            summary.fit = DecayFit(
                decay_C=fit.decay_C,
                decay_rate=fit.decay_rate,
                r_squared=fit.r_squared,
                window=window or (result.records[0].t, result.records[-1].t),
            )
        except ArgumentError as e:
            logger.info(f"No decay fit: {e.msg}")

        if config.experiment.compare_classical:
            classical_config = config.solver.model_copy(update={"scheme": "classical"})
            classical_out = None if out is None else out.with_name(
                f"{out.stem}_classical{out.suffix or '.csv'}"
            )
            try:
                classical = await self._solve(table, grid, classical_config, datum)
                summary.classical_terminal_g_l1 = classical.records[-1].g_norm_L1
                if classical_out is not None:
                    write_csv(records_frame(classical, grid.dim), classical_out)
            except SpectralError as e:
                if e.partial is None:
                    raise
                logger.warning(f"Classical scheme stopped at t={e.t}: {e.msg}")
                summary.classical_terminal_g_l1 = float("inf")
                if classical_out is not None and e.partial is not None:
                    write_csv(
                        records_frame(e.partial, grid.dim),
                        classical_out,
                        truncated_at=e.t,
                        reason=truncation_reason(e),
                    )
            logger.info(
                f"Terminal g_L1: equilibrium preserving {summary.terminal_g_l1:.3e}, "
                f"classical {summary.classical_terminal_g_l1:.3e}"
            )

        if config.initial_condition.kind == "bkw":
            temperature = config.initial_condition.temperature
            t_end = config.initial_condition.t0 + config.solver.t_end
            summary.bkw_terminal_error = bkw_error(result.final, grid, t_end, temperature)
            summary.bkw_residual = await asyncio.to_thread(
                bkw_residual, table, grid, BKW_RESIDUAL_TIMES, temperature
            )

        summary.assertions = check_run_assertions(config, summary)
        if out is not None:
            write_csv(records_frame(result, grid.dim), out)
            Path(f"{out}.json").write_text(summary.model_dump_json(indent=2))
            logger.info(f"Run results written to {out} and {out}.json")
        _raise_on_failed(summary.assertions, out)
        return summary

    async def _ladder_entry(
        self,
        config: ExperimentConfig,
        order: int,
        table: KernelTable,
        reference_table: KernelTable,
        reference_final: SpectralField,
        grid: VelocityGrid,
    ) -> ConvergenceRow:

        datum = build_initial_condition(
            config.initial_condition, config.kernel.dim, order, grid
        )
        macro = split(datum.field, grid, datum.moments).macro
        consistency = await asyncio.to_thread(
            perturbation_norm,
            datum.field,
            macro,
            table,
            reference_table,
            config.experiment.consistency_sobolev_index,
        )
        result = await self._solve(table, grid, config.solver, datum)
        solution_error = norm(
            pad(result.final, reference_table.order) - reference_final, NormKind.L2
        )
        bkw = None
        if config.initial_condition.kind == "bkw":
            t_end = config.initial_condition.t0 + config.solver.t_end
            bkw = bkw_error(
                result.final, grid, t_end, config.initial_condition.temperature
            )
        logger.info(
            f"N={order}: consistency {consistency:.3e}, solution {solution_error:.3e}"
        )
        return ConvergenceRow(
            order=order,
            consistency_error=consistency,
            solution_error=solution_error,
            bkw_error=bkw,
        )

    async def convergence(
        self, config: ExperimentConfig, out: Path | None = None
    ) -> ConvergenceSummary:
        """
        Function runs the N-ladder against the reference order in parallel worker threads
        Args:
            config (ExperimentConfig): configuration with experiment.ladder and reference_order
            out (Path | None): CSV destination, the JSON summary goes to <out>.json
        Returns:
            ConvergenceSummary: error table, ratios and flags
        Raises:
            ConfigurationError: ladder missing
            AssertionFailure: assert_accelerating set and the ladder does not accelerate
        """

        started = time.perf_counter()
        ladder, reference_order = validate_ladder(config)
        reference_kernel = config.kernel.for_reference_order(reference_order)
        grid = self.grid_for(config, reference_order)
        caching = self.kernel_caching_service
        tables = await asyncio.gather(
            *(caching.get_table(reference_kernel.with_order(n)) for n in ladder),
            caching.get_table(reference_kernel),
        )
        *ladder_tables, (reference_table, _) = tables

        reference_datum = build_initial_condition(
            config.initial_condition, config.kernel.dim, reference_order, grid
        )
        reference = await self._solve(reference_table, grid, config.solver, reference_datum)
        rows = list(
            await asyncio.gather(
                *(
                    self._ladder_entry(
                        config, n, table, reference_table, reference.final, grid
                    )
                    for n, (table, _) in zip(ladder, ladder_tables)
                )
            )
        )

        consistency = [row.consistency_error for row in rows]
        solution = [row.solution_error for row in rows]
        consistency_ratios = _ratios(consistency)
        solution_ratios = _ratios(solution)
        monotone = all(b < a for a, b in zip(consistency, consistency[1:])) and all(
            b < a for a, b in zip(solution, solution[1:])
        )
        if not monotone:
            logger.warning("Convergence ladder is not monotone")
        summary = ConvergenceSummary(
            reference_order=reference_order,
            rows=rows,
            consistency_ratios=consistency_ratios,
            solution_ratios=solution_ratios,
            consistency_accelerating=_accelerating(consistency_ratios),
            solution_accelerating=_accelerating(solution_ratios),
            monotone=monotone,
            runtime_seconds=time.perf_counter() - started,
        )
        experiment = config.experiment
        if experiment.assert_accelerating:
            summary.assertions["consistency_accelerating"] = summary.consistency_accelerating
            summary.assertions["solution_accelerating"] = summary.solution_accelerating
        if experiment.bkw_error_tolerance is not None and rows[-1].bkw_error is not None:
            summary.assertions["bkw_error"] = rows[-1].bkw_error < experiment.bkw_error_tolerance

        if out is not None:
            frame = pd.DataFrame([row.model_dump() for row in rows])
            frame["monotone"] = monotone
            write_csv(frame, out)
            Path(f"{out}.json").write_text(summary.model_dump_json(indent=2))
            logger.info(f"Convergence results written to {out} and {out}.json")
        _raise_on_failed(summary.assertions, out)
        return summary
