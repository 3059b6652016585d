import numpy as np
import pytest
from pydantic import ValidationError

from app.common.exceptions.spectral_exceptions import ArgumentError, ConfigurationError
from app.dto.experiment_dto import ExperimentConfig, InitialConditionConfig, SolverConfig
from app.spectral.equilibrium import Moments, maxwellian_values, moments
from app.spectral.initial_conditions import (
    bkw_field,
    bkw_moments,
    bkw_time_derivative,
    bkw_values,
    build_initial_condition,
    mixture_moments,
)
from app.spectral.spectral_core import VelocityGrid


@pytest.fixture
def grid_16() -> VelocityGrid:
    return VelocityGrid.for_order(2, 16)


def test_bkw_has_scaled_unit_moments(grid_16):
    m = moments(bkw_field(grid_16, 16, 1.0), grid_16)
    assert m.rho == pytest.approx(1.0, abs=1e-10)
    assert m.u == pytest.approx((0.0, 0.0), abs=1e-10)
    assert m.T == pytest.approx(0.2, abs=1e-4)
    assert bkw_moments(0.3) == Moments(rho=1.0, u=(0.0, 0.0), T=0.3)


def test_bkw_time_derivative_matches_finite_difference(grid_16):
    t, h = 1.5, 1e-5
    difference = (bkw_values(grid_16, t + h) - bkw_values(grid_16, t - h)) / (2 * h)
    assert np.max(np.abs(difference - bkw_time_derivative(grid_16, t))) < 1e-8


def test_bkw_relaxes_to_maxwellian(grid_16):
    limit = maxwellian_values(bkw_moments(), grid_16)
    assert np.max(np.abs(bkw_values(grid_16, 200.0) - limit)) < 1e-9
    assert np.max(np.abs(bkw_values(grid_16, 0.0) - limit)) > 1e-2


def test_bkw_rejects_bad_arguments():
    with pytest.raises(ArgumentError):
        bkw_values(VelocityGrid(3, 16), 0.0)
    with pytest.raises(ArgumentError):
        bkw_values(VelocityGrid(2, 16), 0.0, temperature=-1.0)


def test_mixture_moments():
    m = mixture_moments(
        [
            Moments(rho=0.5, u=(0.5, 0.0), T=0.2),
            Moments(rho=0.5, u=(-0.5, 0.0), T=0.2),
        ]
    )
    assert m.rho == pytest.approx(1.0)
    assert m.u == pytest.approx((0.0, 0.0))
    assert m.T == pytest.approx(0.325)


def test_two_maxwellians_initial_condition(grid_16):
    config = InitialConditionConfig(
        kind="two_maxwellians",
        components=(
            {"rho": 0.5, "u": (0.5, 0.0), "temperature": 0.2},
            {"rho": 0.5, "u": (-0.5, 0.0), "temperature": 0.2},
        ),
    )
    datum = build_initial_condition(config, 2, 16, grid_16)
    quadrature = moments(datum.field, grid_16)
    assert datum.moments.T == pytest.approx(0.325)
    assert quadrature.rho == pytest.approx(datum.moments.rho, abs=1e-8)
    assert quadrature.T == pytest.approx(datum.moments.T, abs=1e-6)


def test_maxwellian_and_bkw_initial_conditions(grid_16):
    datum = build_initial_condition(
        InitialConditionConfig(kind="maxwellian", u=(0.1, 0.0)), 2, 16, grid_16
    )
    assert datum.moments == Moments(rho=1.0, u=(0.1, 0.0), T=0.2)
    datum = build_initial_condition(
        InitialConditionConfig(kind="bkw", t0=2.0), 2, 16, grid_16
    )
    assert np.array_equal(datum.field.coeffs, bkw_field(grid_16, 16, 2.0).coeffs)
    assert datum.moments == bkw_moments()


def test_coefficients_file(tmp_path, grid_16):
    source = bkw_field(VelocityGrid.for_order(2, 4), 4, 0.0)
    path = tmp_path / "f0.npy"
    np.save(path, source.coeffs)
    grid = VelocityGrid.for_order(2, 4)
    config = InitialConditionConfig(kind="coefficients_file", path=path)
    datum = build_initial_condition(config, 2, 4, grid)
    assert datum.moments is None
    assert np.array_equal(datum.field.coeffs, source.coeffs)

    with pytest.raises(ConfigurationError):
        build_initial_condition(config, 2, 5, VelocityGrid.for_order(2, 5))
    missing = InitialConditionConfig(kind="coefficients_file", path=tmp_path / "missing.npy")
    with pytest.raises(ConfigurationError):
        build_initial_condition(missing, 2, 4, grid)


def _experiment(**overrides) -> dict:
    data = {
        "kernel": {"dim": 2, "order": 4},
        "initial_condition": {"kind": "bkw"},
        "solver": {"dt": 0.1, "t_end": 1.0},
    }
    data.update(overrides)
    return data


def test_experiment_config_validation():
    config = ExperimentConfig.model_validate(_experiment())
    assert config.solver.steps == 10
    assert config.experiment.ladder is None

    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(_experiment(kernel={"dim": 3, "order": 2}))
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(
            _experiment(kernel={"dim": 2, "order": 4, "vhs_exponent": 0.5})
        )
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(
            _experiment(initial_condition={"kind": "maxwellian", "u": [0.0, 0.0, 0.0]})
        )
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(
            _experiment(initial_condition={"kind": "two_maxwellians"})
        )
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(_experiment(experiment={"ladder": [4]}))
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(
            _experiment(experiment={"ladder": [4, 8], "reference_order": 12})
        )


def test_solver_config_validation():
    with pytest.raises(ValidationError):
        SolverConfig(dt=0.3, t_end=1.0)
    with pytest.raises(ValidationError):
        SolverConfig(dt=1.0, t_end=0.5)
    with pytest.raises(ValidationError):
        SolverConfig(dt=0.0, t_end=1.0)
    assert SolverConfig(dt=0.05, t_end=20.0).steps == 400
