"""
Initial data of the homogeneous problem.

The BKW transient is the unit temperature solution for two dimensional Maxwell
molecules with b = 1/(2 pi),

    f(w, t) = exp(-|w|^2 / (2K)) / (2 pi K) * (2 - 1/K + (1 - K) |w|^2 / (2 K^2)),
    K(t) = 1 - exp(-t/8) / 2,

scaled into the box as f_s(v) = s^2 f(s v) with s^2 = 1 / temperature. For Maxwell
molecules the scaling leaves the time variable unchanged.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    ConfigurationError,
)
from app.dto.experiment_dto import InitialConditionConfig, MaxwellianParameters
from app.spectral.equilibrium import (
    Moments,
    check_support,
    maxwellian,
    maxwellian_values,
)
from app.spectral.spectral_core import SpectralField, VelocityGrid, project


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """
    Attributes:
        field (SpectralField): P_N f0
        moments (Moments | None): exact moments of f0, None when only grid moments exist
    """

    field: SpectralField
    moments: Moments | None


def _bkw_k(t: float) -> tuple[float, float]:
    decay = np.exp(-t / 8.0)
    return 1.0 - decay / 2.0, decay / 16.0


def _scaled_radius(grid: VelocityGrid, temperature: float) -> np.ndarray:
    if temperature <= 0:
        raise ArgumentError(
            "BKW temperature must be positive",
            _input={"temperature": temperature},
            _detail=None,
        )
    return grid.speed_squared / temperature


def bkw_values(grid: VelocityGrid, t: float, temperature: float = 0.2) -> np.ndarray:
    """Scaled BKW distribution on the grid nodes at time t."""

    if grid.dim != 2:
        raise ArgumentError(
            "BKW solution is two dimensional", _input={"dim": grid.dim}, _detail=None
        )
    r2 = _scaled_radius(grid, temperature)
    K, _ = _bkw_k(t)
    polynomial = 2.0 - 1.0 / K + (1.0 - K) / (2.0 * K**2) * r2
    return np.exp(-r2 / (2.0 * K)) / (2.0 * np.pi * K) * polynomial / temperature


def bkw_time_derivative(
    grid: VelocityGrid, t: float, temperature: float = 0.2
) -> np.ndarray:
    """d/dt of bkw_values, K'(t) * df/dK evaluated analytically."""

    if grid.dim != 2:
        raise ArgumentError(
            "BKW solution is two dimensional", _input={"dim": grid.dim}, _detail=None
        )
    r2 = _scaled_radius(grid, temperature)
    K, dK = _bkw_k(t)
    gaussian = np.exp(-r2 / (2.0 * K)) / (2.0 * np.pi * K)
    polynomial = 2.0 - 1.0 / K + (1.0 - K) / (2.0 * K**2) * r2
    d_polynomial = 1.0 / K**2 - r2 * (1.0 / (2.0 * K**2) + (1.0 - K) / K**3)
    d_f = gaussian * (
        -polynomial / K + polynomial * r2 / (2.0 * K**2) + d_polynomial
    )
    return dK * d_f / temperature


def bkw_field(
    grid: VelocityGrid, order: int, t: float, temperature: float = 0.2
) -> SpectralField:
    return project(bkw_values(grid, t, temperature), order, grid)


def bkw_moments(temperature: float = 0.2) -> Moments:
    return Moments(rho=1.0, u=(0.0, 0.0), T=temperature)


def _component_moments(p: MaxwellianParameters, dim: int) -> Moments:
    return Moments(rho=p.rho, u=tuple(p.velocity(dim)), T=p.temperature)


def mixture_moments(components: list[Moments]) -> Moments:
    """
    Function computes the exact moments of a sum of Maxwellians
    Args:
        components (list[Moments]): moments of each summand
    Returns:
        Moments: moments of the mixture
    """

    dim = components[0].dim
    rho = sum(c.rho for c in components)
    u = tuple(sum(c.rho * c.u[j] for c in components) / rho for j in range(dim))
    energy = sum(c.rho * (dim * c.T + sum(u_j**2 for u_j in c.u)) for c in components)
    T = (energy - rho * sum(u_j**2 for u_j in u)) / (dim * rho)
    return Moments(rho=rho, u=u, T=T)


def _from_coefficients_file(path: Path, dim: int, order: int) -> SpectralField:

    try:
        coeffs = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise ConfigurationError(
            "Coefficient file could not be read",
            _input={"path": str(path)},
            _detail={"error": repr(e)},
        )
    try:
        return SpectralField(dim, order, coeffs)
    except ArgumentError as e:
        raise ConfigurationError(e.msg, _input={"path": str(path)}, _detail=e.detail)


def build_initial_condition(
    config: InitialConditionConfig, dim: int, order: int, grid: VelocityGrid
) -> InitialDatum:
    """
    Function builds the projected initial datum described by the config
    Args:
        config (InitialConditionConfig): initial condition section
        dim (int): velocity dimension
        order (int): order N
        grid (VelocityGrid): sampling grid with n_g >= 2N+2
    Returns:
        InitialDatum: projected field and, when known analytically, its exact moments
    """

    grid.check_order(order)
    logger.debug(f"Building {config.kind} initial condition, d={dim}, N={order}")
    match config.kind:
        case "maxwellian":
            m = _component_moments(config, dim)
            return InitialDatum(maxwellian(m, grid, order), m)
        case "bkw":
            return InitialDatum(
                bkw_field(grid, order, config.t0, config.temperature),
                bkw_moments(config.temperature),
            )
        case "two_maxwellians":
            parts = [_component_moments(p, dim) for p in config.components]
            for part in parts:
                check_support(part)
            values = sum(maxwellian_values(part, grid) for part in parts)
            return InitialDatum(project(values, order, grid), mixture_moments(parts))
        case "coefficients_file":
            return InitialDatum(_from_coefficients_file(config.path, dim, order), None)
    raise ConfigurationError(
        "Unknown initial condition", _input={"kind": config.kind}, _detail=None
    )
