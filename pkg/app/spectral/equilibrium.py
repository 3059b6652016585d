"""Moments, projected Maxwellians and the micro-macro split f_N = M_N + g_N."""

from dataclasses import dataclass

import numpy as np

from app.common.exceptions.spectral_exceptions import (
    NonPhysicalStateError,
    SupportViolationError,
)
from app.spectral.spectral_core import SpectralField, VelocityGrid, evaluate, project

BOUNDARY_MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Moments:
    """
    Macroscopic quantities of a distribution.
    Attributes:
        rho (float): mass
        u (tuple[float, ...]): mean velocity, length d
        T (float): temperature
    """

    rho: float
    u: tuple[float, ...]
    T: float

    @property
    def dim(self) -> int:
        return len(self.u)

    def to_dict(self) -> dict[str, float | list[float]]:
        return {"rho": self.rho, "u": list(self.u), "T": self.T}


@dataclass(frozen=True)
class ConservedQuantities:
    """Raw grid integrals of 1, v and |v|^2 against a field."""

    mass: float
    momentum: tuple[float, ...]
    energy: float


@dataclass(frozen=True, eq=False)
class MicroMacroState:
    """
    Attributes:
        macro (SpectralField): M_N, fixed in time
        micro (SpectralField): g_N = f_N - M_N
    """

    macro: SpectralField
    micro: SpectralField

    def recompose(self) -> SpectralField:
        return self.macro + self.micro


def _odd_axis(grid: VelocityGrid) -> np.ndarray:
    # closed trapezoid on [-pi, pi]: the node at -pi is shared with +pi,
    # so v and its periodic image cancel in first moments
    axis = np.array(grid.nodes)
    axis[0] = 0.0
    return axis


def conserved_quantities(f: SpectralField, grid: VelocityGrid) -> ConservedQuantities:
    """
    Function integrates 1, v and |v|^2 against the grid values of f, without
    any physicality check (also used for micro parts and drift monitoring)
    Args:
        f (SpectralField): field to integrate
        grid (VelocityGrid): quadrature grid, n_g >= 2N+2
    Returns:
        ConservedQuantities: mass, momentum and energy integrals
    """

    values = evaluate(f, grid)
    odd_axis = _odd_axis(grid)
    momentum = []
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.points_per_axis
        momentum.append(grid.integrate(values * odd_axis.reshape(shape)))
    return ConservedQuantities(
        mass=grid.integrate(values),
        momentum=tuple(momentum),
        energy=grid.integrate(values * grid.speed_squared),
    )


def moments(f: SpectralField, grid: VelocityGrid) -> Moments:
    """
    Function computes density, mean velocity and temperature by grid quadrature
    Args:
        f (SpectralField): real-compatible field
        grid (VelocityGrid): quadrature grid, n_g >= 2N+2
    Returns:
        Moments: rho, u and T = (1/(d rho)) int |u - v|^2 f dv
    Raises:
        NonPhysicalStateError: rho <= 0 or T <= 0
    """

    return moments_from_quantities(conserved_quantities(f, grid), f.dim)


def moments_from_quantities(quantities: ConservedQuantities, dim: int) -> Moments:

    rho = quantities.mass
    if not rho > 0:
        raise NonPhysicalStateError(
            "Distribution has nonpositive mass",
            _input={"rho": rho},
            _detail={"momentum": list(quantities.momentum)},
        )
    u = tuple(p / rho for p in quantities.momentum)
    T = (quantities.energy - rho * sum(u_j**2 for u_j in u)) / (dim * rho)
    if not T > 0:
        raise NonPhysicalStateError(
            "Distribution has nonpositive temperature",
            _input={"T": T},
            _detail={"rho": rho, "u": list(u)},
        )
    return Moments(rho=rho, u=u, T=T)


# split takes a keyword of the same name
_quadrature_moments = moments


def boundary_mass(m: Moments) -> float:
    """exp(-(pi - ||u||_inf)^2 / (2T)), relative size of M at the box boundary."""

    distance = np.pi - max(abs(u_j) for u_j in m.u)
    if distance <= 0:
        return 1.0
    return float(np.exp(-(distance**2) / (2 * m.T)))


def check_support(m: Moments) -> None:

    tail = boundary_mass(m)
    if tail > BOUNDARY_MASS_TOLERANCE:
        raise SupportViolationError(
            "Maxwellian is not negligible at the boundary of the periodic box",
            _input=m.to_dict(),
            _detail={"boundary_mass": tail, "tolerance": BOUNDARY_MASS_TOLERANCE},
        )


def maxwellian_values(m: Moments, grid: VelocityGrid) -> np.ndarray:
    """M(rho, u, T) sampled on the grid nodes."""

    shifted = sum((v - u_j) ** 2 for v, u_j in zip(grid.mesh, m.u))
    return m.rho / (2 * np.pi * m.T) ** (grid.dim / 2) * np.exp(-shifted / (2 * m.T))


def maxwellian(m: Moments, grid: VelocityGrid, order: int) -> SpectralField:
    """
    Function builds the projected Maxwellian M_N = P_N M(rho, u, T)
    Args:
        m (Moments): physical moments, len(m.u) == grid.dim
        grid (VelocityGrid): sampling grid
        order (int): order N of the result
    Returns:
        SpectralField: projected Maxwellian
    Raises:
        NonPhysicalStateError: rho <= 0 or T <= 0
        SupportViolationError: Gaussian not negligible at the box boundary
    """

    if not (m.rho > 0 and m.T > 0) or m.dim != grid.dim:
        raise NonPhysicalStateError(
            "Maxwellian needs rho > 0, T > 0 and a velocity of the grid dimension",
            _input=m.to_dict(),
            _detail={"grid_dim": grid.dim},
        )
    check_support(m)
    return project(maxwellian_values(m, grid), order, grid)


def split(
    f: SpectralField, grid: VelocityGrid, moments: Moments | None = None
) -> MicroMacroState:
    """
    Function splits f into its projected Maxwellian and the remainder
    Args:
        f (SpectralField): field to split
        grid (VelocityGrid): grid used for moments and sampling
        moments (Moments | None): exact moments of the continuum datum; computed from f
            by grid quadrature when omitted
    Returns:
        MicroMacroState: macro = maxwellian(moments), micro = f - macro
    """

    m = moments if moments is not None else _quadrature_moments(f, grid)
    macro = maxwellian(m, grid, f.order)
    return MicroMacroState(macro=macro, micro=f - macro)
