import os

import numpy as np
import pytest

from app.dto.kernel_dto import KernelConfig
from app.spectral.equilibrium import Moments, maxwellian
from app.spectral.kernel import build_table
from app.spectral.spectral_core import SpectralField, VelocityGrid, side, wavenumbers

# iduconfig.Config requires APP_ENV and a matching .env.<APP_ENV> file in the cwd
os.environ.setdefault("APP_ENV", "test")


def random_field(
    rng: np.random.Generator, dim: int, order: int, decay: float = 0.3
) -> SpectralField:
    """Conjugate-symmetric random field with geometrically decaying coefficients."""

    shape = (side(order),) * dim
    raw = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    k2 = (wavenumbers(dim, order) ** 2).sum(axis=-1).reshape(shape)
    raw = raw * np.exp(-decay * k2) * 1e-2
    flipped = raw[(slice(None, None, -1),) * dim]
    return SpectralField(dim, order, (raw + np.conj(flipped)) / 2)


def projected_maxwellian(
    order: int, temperature: float = 0.2, u: tuple[float, float] = (0.0, 0.0)
) -> tuple[SpectralField, Moments, VelocityGrid]:

    grid = VelocityGrid.for_order(2, order)
    m = Moments(rho=1.0, u=u, T=temperature)
    return maxwellian(m, grid, order), m, grid


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def maxwell_table_4():
    return build_table(KernelConfig(dim=2, order=4))


@pytest.fixture(scope="session")
def maxwell_table_8():
    return build_table(KernelConfig(dim=2, order=8))


@pytest.fixture(scope="session")
def maxwell_table_3d():
    return build_table(KernelConfig(dim=3, order=2))
