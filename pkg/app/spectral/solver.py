"""Time integration of the equilibrium preserving and classical spectral schemes."""

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from loguru import logger
from scipy import stats

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    BlowUpError,
    ConfigurationError,
    SpectralError,
)
from app.dto.experiment_dto import SolverConfig
from app.spectral.collision import ep_rhs, q_quadratic
from app.spectral.equilibrium import (
    ConservedQuantities,
    Moments,
    conserved_quantities,
    moments_from_quantities,
    split,
)
from app.spectral.initial_conditions import bkw_field, bkw_time_derivative
from app.spectral.kernel import KernelTable
from app.spectral.spectral_core import (
    NormKind,
    SpectralField,
    VelocityGrid,
    evaluate,
    norm,
    project,
)

Rhs = Callable[[SpectralField], SpectralField]

ENTROPY_FLOOR = 1e-30
FIT_MIN_RECORDS = 10
FIT_MIN_NORM = 1e-14


@dataclass(frozen=True)
class DiagnosticsRecord:
    """
    Quantities monitored at one recorded time. g is f_N - M_N with the fixed M_N.
    Attributes:
        t (float): time
        moments (Moments): grid moments of f_N
        g_norm_L1 (float): grid L1 norm of g
        g_norm_L2 (float): L2 norm of g
        g_norm_Linf (float): max of |g| on the grid
        f0_coeff (complex): mass mode of f_N
        entropy (float | None): int f log f with values clipped at ENTROPY_FLOOR
        min_grid_value (float): min of f_N on the grid
        conserved (ConservedQuantities): raw mass, momentum and energy integrals
        h1_norm (float): H^1 norm of f_N
        h2_norm (float): H^2 norm of f_N
    """

    t: float
    moments: Moments
    g_norm_L1: float
    g_norm_L2: float
    g_norm_Linf: float
    f0_coeff: complex
    entropy: float | None
    min_grid_value: float
    conserved: ConservedQuantities
    h1_norm: float
    h2_norm: float


@dataclass(eq=False)
class RunResult:

    scheme: str
    records: list[DiagnosticsRecord]
    final: SpectralField
    macro: SpectralField
    dt_ceiling: float
    runtime_seconds: float = 0.0
    completed: bool = True
    blow_up_time: float | None = None
    failure: str | None = None
    steps_done: int = 0
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DecayFitResult:

    decay_C: float
    decay_rate: float
    r_squared: float


def _axpy(f: SpectralField, k: SpectralField, h: float, t: float | None) -> SpectralField:

    coeffs = f.coeffs + h * k.coeffs
    if not np.all(np.isfinite(coeffs)):
        raise BlowUpError(
            "Runge-Kutta stage is not finite",
            _input={"dt_fraction": h},
            _detail={"max_abs_f": float(np.abs(f.coeffs).max())},
            t=t,
        )
    return SpectralField(f.dim, f.order, coeffs)


def step_rk4(
    f: SpectralField, rhs: Rhs, dt: float, t: float | None = None
) -> SpectralField:
    """
    Function performs one classical fourth-order Runge-Kutta step
    Args:
        f (SpectralField): state at time t
        rhs (Rhs): autonomous right-hand side
        dt (float): step size
        t (float | None): time of the step, reported on blow-up
    Returns:
        SpectralField: state at t + dt
    Raises:
        BlowUpError: non-finite stage
    """

    try:
        k1 = rhs(f)
        k2 = rhs(_axpy(f, k1, dt / 2, t))
        k3 = rhs(_axpy(f, k2, dt / 2, t))
        k4 = rhs(_axpy(f, k3, dt, t))
    except BlowUpError as e:
        raise BlowUpError(e.msg, e.input, e.detail, t=t if e.t is None else e.t)
    coeffs = f.coeffs + (dt / 6) * (
        k1.coeffs + 2 * k2.coeffs + 2 * k3.coeffs + k4.coeffs
    )
    if not np.all(np.isfinite(coeffs)):
        raise BlowUpError(
            "Runge-Kutta update is not finite", _input={"dt": dt}, _detail=None, t=t
        )
    return SpectralField(f.dim, f.order, coeffs)


def estimate_dt_ceiling(table: KernelTable, f0: SpectralField) -> float:
    """0.5 / L with the Lipschitz bound L = 2 max|beta| sum|f0_k| of f -> Q_N(f, f)."""

    lipschitz = 2.0 * table.max_abs_mode * float(np.abs(f0.coeffs).sum())
    return float("inf") if lipschitz == 0 else 0.5 / lipschitz


def entropy(values: np.ndarray, grid: VelocityGrid) -> float:

    clipped = np.maximum(values, ENTROPY_FLOOR)
    return grid.integrate(clipped * np.log(clipped))


class BoltzmannSolver:
    """
    Integrator of the homogeneous spectral Boltzmann equation with a fixed kernel table.
    Attributes:
        table (KernelTable): kernel modes of the run order
        grid (VelocityGrid): grid for moments and grid norms
        config (SolverConfig): scheme and time stepping
    """

    def __init__(
        self, table: KernelTable, grid: VelocityGrid, config: SolverConfig
    ) -> None:

        if grid.dim != table.dim:
            raise ConfigurationError(
                "Grid and kernel table dimensions differ",
                _input={"grid_dim": grid.dim, "table_dim": table.dim},
                _detail=None,
            )
        grid.check_order(table.order)
        self.table = table
        self.grid = grid
        self.config = config

    def rhs(self, macro: SpectralField) -> Rhs:

        if self.config.scheme == "equilibrium_preserving":
            return lambda f: ep_rhs(f, macro, self.table)
        return lambda f: q_quadratic(f, f, self.table)

    def record(self, t: float, f: SpectralField, macro: SpectralField) -> DiagnosticsRecord:

        values = evaluate(f, self.grid)
        g = f - macro
        g_values = np.abs(evaluate(g, self.grid))
        quantities = conserved_quantities(f, self.grid)
        return DiagnosticsRecord(
            t=t,
            moments=moments_from_quantities(quantities, f.dim),
            g_norm_L1=self.grid.integrate(g_values),
            g_norm_L2=norm(g, NormKind.L2),
            g_norm_Linf=float(g_values.max()),
            f0_coeff=f.mass_mode,
            entropy=entropy(values, self.grid) if self.config.entropy else None,
            min_grid_value=float(values.min()),
            conserved=quantities,
            h1_norm=norm(f, NormKind.HR, r=1.0),
            h2_norm=norm(f, NormKind.HR, r=2.0),
        )

    def run(
        self,
        f0: SpectralField,
        moments: Moments | None = None,
        on_record: Callable[[DiagnosticsRecord], None] | None = None,
    ) -> RunResult:
        """
        Function integrates f0 to t_end, M_N is computed once and held fixed
        Args:
            f0 (SpectralField): projected initial datum of the table order
            moments (Moments | None): exact moments of the continuum datum, grid
                moments of f0 when omitted
            on_record (Callable | None): called with every new record
        Returns:
            RunResult: records, final state and the fixed M_N
        Raises:
            BlowUpError: non-finite stage, carrying the partial RunResult in `partial`
            NonPhysicalStateError: moments of f0 not physical, or of a recorded state
                (then also carrying `t` and `partial`)
            ConfigurationError: dt above the ceiling when enforced
        """

        if f0.dim != self.table.dim or f0.order != self.table.order:
            raise ArgumentError(
                "Initial datum does not match the kernel table",
                _input={"dim": f0.dim, "order": f0.order},
                _detail={"table_dim": self.table.dim, "table_order": self.table.order},
            )
        config = self.config
        macro = split(f0, self.grid, moments).macro
        dt_ceiling = estimate_dt_ceiling(self.table, f0)
        if config.dt > dt_ceiling:
            logger.warning(
                f"dt={config.dt} exceeds the stability estimate {dt_ceiling:.4g}"
            )
            if config.enforce_dt_ceiling:
                raise ConfigurationError(
                    "Time step exceeds the preflight stability ceiling",
                    _input={"dt": config.dt},
                    _detail={"dt_ceiling": dt_ceiling},
                )
        else:
            logger.info(f"dt={config.dt}, stability estimate {dt_ceiling:.4g}")

        rhs = self.rhs(macro)
        result = RunResult(
            scheme=config.scheme,
            records=[],
            final=f0,
            macro=macro,
            dt_ceiling=dt_ceiling,
        )

        def add_record(t: float, f: SpectralField) -> None:
            record = self.record(t, f, macro)
            result.records.append(record)
            logger.debug(
                f"t={t:.4f} g_L1={record.g_norm_L1:.3e} f0={record.f0_coeff.real:.15e}"
            )
            if on_record is not None:
                on_record(record)

        started = time.perf_counter()
        steps = config.steps
        f = f0
        add_record(0.0, f)
        t = 0.0
        try:
            for step in range(1, steps + 1):
                t = (step - 1) * config.dt
                f = step_rk4(f, rhs, config.dt, t=t)
                result.final = f
                result.steps_done = step
                t = step * config.dt
                if step % config.record_every == 0 or step == steps:
                    add_record(t, f)
        except SpectralError as e:
            if e.t is None:
                e.t = t
            result.completed = False
            result.failure = e.__class__.__name__
            if isinstance(e, BlowUpError):
                result.blow_up_time = e.t
            result.runtime_seconds = time.perf_counter() - started
            logger.error(
                f"{config.scheme} run stopped at t={e.t} by {result.failure}: {e.msg}"
            )
            e.partial = result
            raise e
        result.runtime_seconds = time.perf_counter() - started
        logger.info(
            f"{config.scheme} run finished: {steps} steps in "
            f"{result.runtime_seconds:.2f}s, terminal g_L1={result.records[-1].g_norm_L1:.3e}"
        )
        return result


def run(
    f0: SpectralField,
    table: KernelTable,
    grid: VelocityGrid,
    config: SolverConfig,
    moments: Moments | None = None,
) -> RunResult:
    return BoltzmannSolver(table, grid, config).run(f0, moments)


def fit_decay(
    records: Sequence[DiagnosticsRecord], window: tuple[float, float] | None = None
) -> DecayFitResult:
    """
    Function fits log g_norm_L1 = log C - rate * t by least squares
    Args:
        records (Sequence[DiagnosticsRecord]): run records
        window (tuple[float, float] | None): closed time window, all records when None
    Returns:
        DecayFitResult: decay_C, decay_rate and r^2 of the fit
    Raises:
        ArgumentError: fewer than 10 usable records in the window
    """

    t_a, t_b = window if window is not None else (-np.inf, np.inf)
    selected = [
        r for r in records if t_a <= r.t <= t_b and r.g_norm_L1 > FIT_MIN_NORM
    ]
    if len(selected) < FIT_MIN_RECORDS:
        raise ArgumentError(
            "Not enough records to fit the decay",
            _input={"window": [t_a, t_b]},
            _detail={"usable_records": len(selected), "required": FIT_MIN_RECORDS},
        )
    t = np.array([r.t for r in selected])
    log_g = np.log([r.g_norm_L1 for r in selected])
    fit = stats.linregress(t, log_g)
    return DecayFitResult(
        decay_C=float(np.exp(fit.intercept)),
        decay_rate=float(-fit.slope),
        r_squared=float(fit.rvalue**2),
    )


def bkw_residual(
    table: KernelTable,
    grid: VelocityGrid,
    times: Sequence[float],
    temperature: float = 0.2,
) -> float:
    """
    Function validates the BKW solution against the discrete operator
    Args:
        table (KernelTable): d = 2 Maxwell molecule kernel table
        grid (VelocityGrid): sampling grid
        times (Sequence[float]): times to check
        temperature (float): box temperature of the scaled solution
    Returns:
        float: max over times of ||P_N d/dt f_BKW - Q_N(P_N f_BKW, P_N f_BKW)||_L2
    """

    residual = 0.0
    for t in times:
        f = bkw_field(grid, table.order, t, temperature)
        derivative = project(bkw_time_derivative(grid, t, temperature), table.order, grid)
        value = norm(derivative - q_quadratic(f, f, table), NormKind.L2)
        logger.debug(f"BKW residual at t={t}: {value:.3e}")
        residual = max(residual, value)
    return residual


def bkw_error(
    f: SpectralField, grid: VelocityGrid, t: float, temperature: float = 0.2
) -> float:
    """L2 distance between a state and the projected BKW solution at time t."""

    return norm(f - bkw_field(grid, f.order, t, temperature), NormKind.L2)
