import math
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from app.dto.kernel_dto import KernelConfig

SUMMARY_DIGITS = 12


def round_significant(value: Any, digits: int = SUMMARY_DIGITS) -> Any:
    """Round floats (recursively in lists and dicts) to the given significant digits."""

    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if value == 0.0 or not math.isfinite(value):
            return value
        return round(value, digits - 1 - math.floor(math.log10(abs(value))))
    if isinstance(value, (list, tuple)):
        return [round_significant(item, digits) for item in value]
    if isinstance(value, dict):
        return {key: round_significant(item, digits) for key, item in value.items()}
    return value


class MaxwellianParameters(BaseModel):

    rho: float = Field(default=1.0, gt=0.0, examples=[1.0])
    u: tuple[float, ...] | None = Field(
        default=None, description="Mean velocity, zero vector when omitted"
    )
    temperature: float = Field(default=0.2, gt=0.0, examples=[0.2])

    def velocity(self, dim: int) -> tuple[float, ...]:
        return self.u if self.u is not None else (0.0,) * dim


class InitialConditionConfig(MaxwellianParameters):
    """
    Initial datum descriptor. For kind "bkw" temperature is the box temperature the
    unit-temperature BKW solution is scaled to and t0 its starting time.
    """

    kind: Literal["maxwellian", "bkw", "two_maxwellians", "coefficients_file"] = Field(
        examples=["bkw"]
    )
    t0: float = Field(default=0.0, ge=0.0, description="BKW starting time")
    components: tuple[MaxwellianParameters, MaxwellianParameters] | None = None
    path: Path | None = Field(
        default=None, description="npy file with (2N+1)^d complex coefficients"
    )

    @model_validator(mode="after")
    def validate_kind(self) -> "InitialConditionConfig":
        if self.kind == "two_maxwellians" and self.components is None:
            raise ValueError("two_maxwellians needs exactly two components")
        if self.kind == "coefficients_file" and self.path is None:
            raise ValueError("coefficients_file needs a path")
        return self


class SolverConfig(BaseModel):

    scheme: Literal["equilibrium_preserving", "classical"] = "equilibrium_preserving"
    dt: float = Field(gt=0.0, examples=[0.05])
    t_end: float = Field(gt=0.0, examples=[20.0])
    record_every: int = Field(default=1, ge=1)
    entropy: bool = Field(default=True, description="Record int f log f")
    enforce_dt_ceiling: bool = Field(
        default=False, description="Reject dt above the preflight stability estimate"
    )

    @model_validator(mode="after")
    def validate_steps(self) -> "SolverConfig":
        if self.t_end < self.dt:
            raise ValueError("t_end must not be smaller than dt")
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be an integer multiple of dt")
        return self

    @property
    def steps(self) -> int:
        return round(self.t_end / self.dt)


class ExperimentSection(BaseModel):
    """Experiment options and the optional assertions checked after a run."""

    grid_points: int | None = Field(
        default=None, ge=4, description="Velocity grid points per axis"
    )
    compare_classical: bool = False
    fit_window: tuple[float, float] | None = Field(default=None, examples=[[2.0, 20.0]])
    ladder: tuple[int, ...] | None = Field(default=None, examples=[[4, 8, 16]])
    reference_order: int | None = Field(default=None, ge=2, examples=[32])
    consistency_sobolev_index: float = Field(default=0.0, ge=0.0)

    max_g_l1: float | None = None
    min_decay_rate: float | None = None
    min_r_squared: float | None = None
    max_decay_ratio: float | None = None
    max_mass_drift: float | None = None
    assert_long_time_contrast: bool = False
    assert_accelerating: bool = False
    bkw_residual_tolerance: float | None = None
    bkw_error_tolerance: float | None = None

    @model_validator(mode="after")
    def validate_ladder(self) -> "ExperimentSection":
        if self.fit_window is not None and self.fit_window[0] >= self.fit_window[1]:
            raise ValueError("fit_window must be an increasing pair")
        if self.ladder is None:
            return self
        if len(self.ladder) < 2:
            raise ValueError("Convergence ladder needs at least two orders")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])) or self.ladder[0] < 1:
            raise ValueError("Convergence ladder must be strictly increasing from 1")
        if self.reference_order is None or self.reference_order < 2 * self.ladder[-1]:
            raise ValueError("reference_order must be at least twice the largest order")
        return self


class ExperimentConfig(BaseModel):

    kernel: KernelConfig
    initial_condition: InitialConditionConfig
    solver: SolverConfig
    experiment: ExperimentSection = ExperimentSection()

    @model_validator(mode="after")
    def validate_sections(self) -> "ExperimentConfig":
        dim = self.kernel.dim
        ic = self.initial_condition
        parameters = [ic, *(ic.components or ())]
        if any(p.u is not None and len(p.u) != dim for p in parameters):
            raise ValueError(f"Mean velocities must have length {dim}")
        if ic.kind == "bkw":
            if dim != 2 or self.kernel.vhs_exponent != 0.0:
                raise ValueError("BKW initial data needs d = 2 and Maxwell molecules")
            if self.kernel.angular_kernel.kind != "isotropic":
                raise ValueError("BKW initial data needs an isotropic angular kernel")
        return self


class KernelBuildSummary(BaseModel):

    model_config = ConfigDict(ser_json_inf_nan="constants")

    path: str
    config_hash: str
    dim: int
    order: int
    radial_nodes: int
    angular_nodes_q: int
    angular_nodes_omega: int
    refinement_discrepancy: float | None
    worst_pair: list[list[int]] | None
    payload_sha256: str
    cached: bool = False

    @field_serializer("refinement_discrepancy")
    def serialize_discrepancy(self, value: float | None) -> float | None:
        return round_significant(value)


class DecayFit(BaseModel):

    decay_C: float
    decay_rate: float
    r_squared: float
    window: tuple[float, float]


class RunSummary(BaseModel):
    """JSON summary of a run; floats rounded to SUMMARY_DIGITS significant digits."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    scheme: str
    dim: int
    order: int
    steps: int
    completed: bool
    blow_up_time: float | None = None
    failure: str | None = None
    dt: float
    dt_ceiling: float
    runtime_seconds: float
    final_moments: dict[str, Any] | None
    initial_mass_mode: list[float]
    max_g_l1: float
    terminal_g_l1: float
    initial_g_l1: float
    max_mass_drift: float
    max_momentum_drift: float
    max_energy_drift: float
    max_sobolev_growth: dict[str, float]
    fit: DecayFit | None = None
    classical_terminal_g_l1: float | None = None
    bkw_residual: float | None = None
    bkw_terminal_error: float | None = None
    assertions: dict[str, bool] = {}

    @field_serializer(
        "blow_up_time",
        "dt_ceiling",
        "runtime_seconds",
        "final_moments",
        "initial_mass_mode",
        "max_g_l1",
        "terminal_g_l1",
        "initial_g_l1",
        "max_mass_drift",
        "max_momentum_drift",
        "max_energy_drift",
        "max_sobolev_growth",
        "classical_terminal_g_l1",
        "bkw_residual",
        "bkw_terminal_error",
    )
    def serialize_rounded(self, value: Any) -> Any:
        return round_significant(value)

    @field_serializer("fit")
    def serialize_fit(self, value: DecayFit | None) -> dict[str, Any] | None:
        return None if value is None else round_significant(value.model_dump())


class ConvergenceRow(BaseModel):

    order: int
    consistency_error: float
    solution_error: float
    bkw_error: float | None = None


class ConvergenceSummary(BaseModel):

    model_config = ConfigDict(ser_json_inf_nan="constants")

    reference_order: int
    rows: list[ConvergenceRow]
    consistency_ratios: list[float]
    solution_ratios: list[float]
    consistency_accelerating: bool
    solution_accelerating: bool
    monotone: bool
    runtime_seconds: float
    assertions: dict[str, bool] = {}

    @field_serializer("rows")
    def serialize_rows(self, value: list[ConvergenceRow]) -> list[dict[str, Any]]:
        return [round_significant(row.model_dump()) for row in value]

    @field_serializer("consistency_ratios", "solution_ratios", "runtime_seconds")
    def serialize_rounded(self, value: Any) -> Any:
        return round_significant(value)
