import numpy as np
import pytest

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    BlowUpError,
    ConfigurationError,
    NonPhysicalStateError,
)
from app.dto.experiment_dto import SolverConfig
from app.spectral.equilibrium import ConservedQuantities, Moments
from app.spectral.initial_conditions import bkw_field, bkw_moments
from app.spectral.solver import (
    BoltzmannSolver,
    DiagnosticsRecord,
    entropy,
    estimate_dt_ceiling,
    fit_decay,
    run,
    step_rk4,
)
from app.spectral.spectral_core import SpectralField, VelocityGrid, evaluate

from .conftest import projected_maxwellian, random_field


def _record(t: float, g: float) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        t=t,
        moments=Moments(rho=1.0, u=(0.0, 0.0), T=0.2),
        g_norm_L1=g,
        g_norm_L2=g,
        g_norm_Linf=g,
        f0_coeff=0j,
        entropy=None,
        min_grid_value=0.0,
        conserved=ConservedQuantities(mass=1.0, momentum=(0.0, 0.0), energy=0.4),
        h1_norm=0.0,
        h2_norm=0.0,
    )


def test_rk4_with_zero_rhs_is_identity(rng):
    f = random_field(rng, 2, 3)
    g = step_rk4(f, lambda x: SpectralField.zeros(2, 3), 0.1)
    assert np.array_equal(g.coeffs, f.coeffs)


def test_rk4_linear_step_matches_taylor_polynomial(rng):
    f = random_field(rng, 2, 3)
    dt = 0.1
    g = step_rk4(f, lambda x: -x, dt)
    factor = 1 - dt + dt**2 / 2 - dt**3 / 6 + dt**4 / 24
    assert np.allclose(g.coeffs, f.coeffs * factor, rtol=1e-14, atol=0)


def test_rk4_is_fourth_order(rng):
    f = random_field(rng, 2, 3)
    exact = f.coeffs * np.exp(-2.0)

    def error(steps: int) -> float:
        state = f
        for _ in range(steps):
            state = step_rk4(state, lambda x: x * -2.0, 1.0 / steps)
        return float(np.max(np.abs(state.coeffs - exact)))

    assert np.log2(error(10) / error(20)) >= 3.8


def test_equilibrium_run_stays_exactly_at_equilibrium(maxwell_table_8):
    M, m, grid = projected_maxwellian(8)
    config = SolverConfig(dt=0.01, t_end=10.0, record_every=10)
    result = run(M, maxwell_table_8, grid, config, moments=m)
    assert result.completed
    assert result.steps_done == 1000
    assert len(result.records) == 101
    assert all(r.g_norm_L1 == 0.0 for r in result.records)
    assert all(r.g_norm_Linf == 0.0 for r in result.records)
    assert np.array_equal(result.final.coeffs, M.coeffs)


def test_classical_run_drifts_from_equilibrium(maxwell_table_8):
    M, m, grid = projected_maxwellian(8)
    config = SolverConfig(scheme="classical", dt=0.01, t_end=0.2, record_every=5)
    result = run(M, maxwell_table_8, grid, config, moments=m)
    assert result.records[-1].g_norm_L1 > 0.0
    masses = [r.conserved.mass for r in result.records]
    assert max(masses) - min(masses) < 1e-12


def test_bkw_run_conserves_mass_and_relaxes(maxwell_table_8):
    grid = VelocityGrid.for_order(2, 8)
    f0 = bkw_field(grid, 8, 0.0)
    config = SolverConfig(dt=0.05, t_end=1.0, record_every=2)
    seen = []
    result = BoltzmannSolver(maxwell_table_8, grid, config).run(
        f0, bkw_moments(), on_record=seen.append
    )
    assert len(seen) == len(result.records) == 11
    assert [r.t for r in result.records] == pytest.approx(np.linspace(0.0, 1.0, 11))
    masses = [r.f0_coeff.real for r in result.records]
    assert max(masses) - min(masses) < 1e-14
    assert result.records[-1].g_norm_L2 < result.records[0].g_norm_L2
    assert all(r.entropy is not None for r in result.records)


def test_solver_rejects_mismatched_inputs(maxwell_table_8, maxwell_table_4):
    M, m, grid = projected_maxwellian(4)
    config = SolverConfig(dt=0.01, t_end=0.01)
    with pytest.raises(ArgumentError):
        run(M, maxwell_table_8, VelocityGrid.for_order(2, 8), config, moments=m)
    with pytest.raises(ConfigurationError):
        BoltzmannSolver(maxwell_table_4, VelocityGrid(3, 16), config)


def test_dt_ceiling(maxwell_table_8):
    M, m, grid = projected_maxwellian(8)
    ceiling = estimate_dt_ceiling(maxwell_table_8, M)
    assert 0 < ceiling < 1.0
    assert estimate_dt_ceiling(maxwell_table_8, SpectralField.zeros(2, 8)) == float("inf")

    relaxed = SolverConfig(dt=1.0, t_end=1.0)
    assert run(M, maxwell_table_8, grid, relaxed, moments=m).dt_ceiling == ceiling
    enforced = SolverConfig(dt=1.0, t_end=1.0, enforce_dt_ceiling=True)
    with pytest.raises(ConfigurationError):
        run(M, maxwell_table_8, grid, enforced, moments=m)


def test_blow_up_carries_time_and_partial_result(maxwell_table_4):
    M, m, grid = projected_maxwellian(4)
    f0 = M * 1e160
    config = SolverConfig(dt=0.1, t_end=1.0, entropy=False)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(BlowUpError) as error:
            run(f0, maxwell_table_4, grid, config, moments=m)
    assert error.value.t == 0.0
    partial = error.value.partial
    assert partial is not None
    assert not partial.completed
    assert partial.blow_up_time == 0.0
    assert len(partial.records) == 1


def test_entropy_of_maxwellian():
    M, m, grid = projected_maxwellian(16)
    expected = -np.log(2 * np.pi * m.T) - 1.0
    assert entropy(evaluate(M, grid), grid) == pytest.approx(expected, rel=1e-6)


def test_fit_decay_recovers_exponential():
    records = [_record(t, 2.0 * np.exp(-0.3 * t)) for t in np.linspace(0.0, 20.0, 41)]
    fit = fit_decay(records)
    assert fit.decay_rate == pytest.approx(0.3)
    assert fit.decay_C == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)

    windowed = fit_decay(records, window=(5.0, 15.0))
    assert windowed.decay_rate == pytest.approx(0.3)


def test_fit_decay_constant_and_insufficient_series():
    constant = [_record(float(t), 1e-3) for t in range(12)]
    assert fit_decay(constant).decay_rate == 0.0
    with pytest.raises(ArgumentError):
        fit_decay(constant[:5])
    exact = [_record(float(t), 0.0) for t in range(12)]
    with pytest.raises(ArgumentError):
        fit_decay(exact)
    with pytest.raises(ArgumentError):
        fit_decay(constant, window=(20.0, 30.0))


def test_bkw_run_is_fourth_order_in_time(maxwell_table_8):
    grid = VelocityGrid.for_order(2, 8)
    f0 = bkw_field(grid, 8, 0.0)

    def final(dt: float) -> np.ndarray:
        config = SolverConfig(dt=dt, t_end=2.0, record_every=1000, entropy=False)
        return run(f0, maxwell_table_8, grid, config, bkw_moments()).final.coeffs

    reference = final(0.0125)
    errors = [float(np.max(np.abs(final(dt) - reference))) for dt in (0.2, 0.1)]
    assert np.log2(errors[0] / errors[1]) >= 3.8


def test_numerical_failure_in_diagnostics_keeps_partial_result(maxwell_table_4):
    M, m, grid = projected_maxwellian(4)
    config = SolverConfig(dt=0.05, t_end=1.0, record_every=2)

    def reject_late(record: DiagnosticsRecord) -> None:
        if record.t > 0.25:
            raise NonPhysicalStateError(
                "Recorded state is not physical", _input={"t": record.t}
            )

    with pytest.raises(NonPhysicalStateError) as error:
        BoltzmannSolver(maxwell_table_4, grid, config).run(M, m, on_record=reject_late)
    assert error.value.t == pytest.approx(0.3)
    partial = error.value.partial
    assert not partial.completed
    assert partial.failure == "NonPhysicalStateError"
    assert partial.blow_up_time is None
    assert [r.t for r in partial.records] == pytest.approx([0.0, 0.1, 0.2, 0.3])
