import asyncio
from pathlib import Path

import numpy as np
import pytest

from app.common.experiments.experiments_service import ExperimentsService
from app.common.storage.models.kernel_caching_service import KernelCachingService
from app.common.validators.config_validators import load_experiment_config
from app.dto.experiment_dto import SolverConfig
from app.dto.kernel_dto import KernelConfig
from app.spectral.collision import perturbation_norm
from app.spectral.equilibrium import split
from app.spectral.initial_conditions import bkw_field, bkw_moments
from app.spectral.kernel import build_table, compute_mode
from app.spectral.solver import bkw_residual, fit_decay, run
from app.spectral.spectral_core import (
    SpectralField,
    VelocityGrid,
    truncate,
    wavenumbers,
)

from .conftest import projected_maxwellian, random_field

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture(scope="module")
def maxwell_table_16():
    return build_table(KernelConfig(dim=2, order=16))


def test_equilibrium_start_against_classical_scheme(maxwell_table_8):
    M, m, grid = projected_maxwellian(8)
    ep = run(M, maxwell_table_8, grid, SolverConfig(dt=0.05, t_end=50.0), moments=m)
    assert max(r.g_norm_Linf for r in ep.records) == 0.0
    assert np.array_equal(ep.final.coeffs, M.coeffs)

    classical_config = SolverConfig(scheme="classical", dt=0.05, t_end=20.0)
    classical = run(M, maxwell_table_8, grid, classical_config, moments=m)
    assert classical.records[-1].g_norm_L1 > ep.records[-1].g_norm_L1


def test_bkw_micro_part_decays_exponentially(maxwell_table_16):
    grid = VelocityGrid.for_order(2, 16)
    config = SolverConfig(dt=0.05, t_end=20.0, record_every=4)
    result = run(bkw_field(grid, 16, 0.0), maxwell_table_16, grid, config, bkw_moments())

    fit = fit_decay(result.records, window=(2.0, 20.0))
    assert fit.decay_rate > 0
    assert fit.r_squared > 0.99
    # g ~ exp(-t/4) for BKW, so g(20) / g(0) cannot drop below about 7e-3
    assert result.records[-1].g_norm_L1 < 1e-2 * result.records[0].g_norm_L1

    f0 = [r.f0_coeff for r in result.records]
    assert max(abs(c - f0[0]) for c in f0) < 1e-12


def test_kernel_modes_stable_under_node_doubling():
    config = KernelConfig(dim=2, order=16)
    doubled = config.doubled()
    R = config.support_radius
    assert abs(compute_mode(config, (0, 0), (0, 0)) - np.pi * R**2) < 1e-10

    rng = np.random.default_rng(7)
    k = wavenumbers(2, 16)
    for _ in range(20):
        l, m = k[rng.integers(len(k), size=2)]
        coarse = compute_mode(config, tuple(l), tuple(m))
        fine = compute_mode(doubled, tuple(l), tuple(m))
        assert abs(coarse - fine) < 1e-8


def test_bkw_residual_decreases_with_order(maxwell_table_8, maxwell_table_16):
    times = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    coarse = bkw_residual(maxwell_table_8, VelocityGrid.for_order(2, 8), times)
    fine = bkw_residual(maxwell_table_16, VelocityGrid.for_order(2, 16), times)
    assert fine < coarse


def test_convergence_ladder_accelerates(tmp_path):
    config = load_experiment_config(CONFIGS / "convergence.toml")
    service = ExperimentsService(KernelCachingService(tmp_path))
    summary = asyncio.run(service.convergence(config, tmp_path / "ladder.csv"))

    assert [row.order for row in summary.rows] == [4, 8, 16]
    assert all(r > 1 for r in summary.consistency_ratios)
    assert summary.consistency_accelerating
    assert summary.solution_accelerating
    assert summary.monotone

    reference_kernel = config.kernel.for_reference_order(32)
    reference_table, cached = asyncio.run(
        service.kernel_caching_service.get_table(reference_kernel)
    )
    assert cached
    residual = bkw_residual(
        reference_table, VelocityGrid.for_order(2, 32), (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    )
    if residual < 1e-5:
        assert summary.rows[-1].bkw_error < 1e-5


def test_perturbation_is_spectrally_small_only_for_smooth_states(
    rng, maxwell_table_4, maxwell_table_8, maxwell_table_16
):
    def perturbation(f: SpectralField, macro: SpectralField) -> float:
        table = maxwell_table_4 if f.order == 4 else maxwell_table_8
        return perturbation_norm(f, macro, table, maxwell_table_16)

    smooth = []
    for order in (4, 8):
        grid = VelocityGrid.for_order(2, order)
        f = bkw_field(grid, order, 1.0)
        smooth.append(perturbation(f, split(f, grid, bkw_moments()).macro))
    assert smooth[1] < 0.1 * smooth[0]

    rough_micro = random_field(rng, 2, 8, decay=0.0)
    rough = []
    for order in (4, 8):
        M, _, _ = projected_maxwellian(order)
        g = rough_micro if order == 8 else truncate(rough_micro, 4)
        rough.append(perturbation(M + g, M))
    assert rough[1] > 0.5 * rough[0]


def test_classical_scheme_ends_farther_from_equilibrium_on_bkw(maxwell_table_8):
    grid = VelocityGrid.for_order(2, 8)
    f0 = bkw_field(grid, 8, 0.0)
    terminal = {}
    for scheme in ("equilibrium_preserving", "classical"):
        config = SolverConfig(
            scheme=scheme, dt=0.05, t_end=20.0, record_every=20, entropy=False
        )
        result = run(f0, maxwell_table_8, grid, config, bkw_moments())
        terminal[scheme] = result.records[-1].g_norm_L1
    assert terminal["classical"] > terminal["equilibrium_preserving"]
