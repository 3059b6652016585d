"""
Periodic velocity-space representation on [-pi, pi)^d.

Coefficients of a field of order N are stored row-major over the shifted
multi-index k + N, i.e. an array of shape (2N+1,)*d. The same layout is used
by the kernel table rows and columns.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np
from scipy import fft as sp_fft

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    ConfigurationError,
)

SUPPORTED_DIMS = (2, 3)


def side(order: int) -> int:
    return 2 * order + 1


def _check_dim_order(dim: int, order: int) -> None:

    if dim not in SUPPORTED_DIMS:
        raise ArgumentError(
            "Only dimensions 2 and 3 are supported",
            _input={"dim": dim},
            _detail={"supported": list(SUPPORTED_DIMS)},
        )
    if order < 1:
        raise ArgumentError(
            "Order must be at least 1", _input={"order": order}, _detail=None
        )


@lru_cache(maxsize=64)
def wavenumbers(dim: int, order: int) -> np.ndarray:
    """
    Function returns all multi-indices of P^N in storage order
    Args:
        dim (int): velocity dimension
        order (int): order N
    Returns:
        np.ndarray: integer array of shape ((2N+1)^d, d), read-only
    """

    axis = np.arange(-order, order + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=-1)
    k.flags.writeable = False
    return k


@lru_cache(maxsize=64)
def _alternating_sign(dim: int, order: int) -> np.ndarray:
    # (-1)^(k_1 + ... + k_d), shift from nodes starting at -pi
    axis = np.where(np.arange(-order, order + 1) % 2 == 0, 1.0, -1.0)
    sign = axis
    for _ in range(dim - 1):
        sign = np.multiply.outer(sign, axis)
    sign.flags.writeable = False
    return sign


@lru_cache(maxsize=64)
def _squared_wavenumber(dim: int, order: int) -> np.ndarray:
    k2 = (wavenumbers(dim, order) ** 2).sum(axis=-1).reshape((side(order),) * dim)
    k2.flags.writeable = False
    return k2


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Fourier coefficients of a periodic velocity distribution truncated at order N.
    Attributes:
        dim (int): velocity dimension d in {2, 3}
        order (int): N, modes per half-axis
        coeffs (np.ndarray): complex array of shape (2N+1,)*d, index k + N per axis
    """

    dim: int
    order: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:

        _check_dim_order(self.dim, self.order)
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        expected = (side(self.order),) * self.dim
        if coeffs.shape != expected:
            if coeffs.size != side(self.order) ** self.dim:
                raise ArgumentError(
                    "Coefficient array does not match field order",
                    _input={"shape": list(coeffs.shape)},
                    _detail={"expected": list(expected)},
                )
            coeffs = coeffs.reshape(expected)
        if not np.all(np.isfinite(coeffs)):
            raise ArgumentError(
                "Spectral field coefficients must be finite",
                _input={"dim": self.dim, "order": self.order},
                _detail={"non_finite": int((~np.isfinite(coeffs)).sum())},
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, dim: int, order: int) -> "SpectralField":
        return cls(dim, order, np.zeros((side(order),) * dim, dtype=np.complex128))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape

    @property
    def mass_mode(self) -> complex:
        return complex(self.coeffs[(self.order,) * self.dim])

    def coeff(self, k: tuple[int, ...] | list[int]) -> complex:
        """Coefficient of the multi-index k."""

        if len(k) != self.dim or any(abs(k_j) > self.order for k_j in k):
            raise ArgumentError(
                "Multi-index outside of P^N",
                _input={"k": list(k)},
                _detail={"order": self.order},
            )
        return complex(self.coeffs[tuple(k_j + self.order for k_j in k)])

    def conjugate_symmetry_defect(self) -> float:
        """Max |c(-k) - conj(c(k))|; zero for fields representing real functions."""

        flipped = self.coeffs[(slice(None, None, -1),) * self.dim]
        return float(np.max(np.abs(flipped - np.conj(self.coeffs))))

    def _check_compatible(self, other: "SpectralField") -> None:

        if self.dim != other.dim or self.order != other.order:
            raise ArgumentError(
                "Spectral fields do not share dimension and order",
                _input={
                    "left": {"dim": self.dim, "order": self.order},
                    "right": {"dim": other.dim, "order": other.order},
                },
                _detail=None,
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.dim, self.order, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.dim, self.order, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.dim, self.order, -self.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.dim, self.order, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VelocityGrid:
    """
    Uniform grid on [-pi, pi)^d.
    Attributes:
        dim (int): velocity dimension
        points_per_axis (int): n_g
    """

    dim: int
    points_per_axis: int

    def __post_init__(self) -> None:

        if self.dim not in SUPPORTED_DIMS:
            raise ConfigurationError(
                "Only dimensions 2 and 3 are supported",
                _input={"dim": self.dim},
                _detail=None,
            )
        if self.points_per_axis < 4:
            raise ConfigurationError(
                "Velocity grid needs at least 4 points per axis",
                _input={"points_per_axis": self.points_per_axis},
                _detail=None,
            )

    @classmethod
    def for_order(cls, dim: int, order: int) -> "VelocityGrid":
        """Smallest power-of-two grid with n_g >= 2N+2."""

        return cls(dim, 1 << (2 * order + 1).bit_length())

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = -np.pi + self.spacing * np.arange(self.points_per_axis)
        nodes.flags.writeable = False
        return nodes

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.nodes] * self.dim), indexing="ij"))

    @cached_property
    def speed_squared(self) -> np.ndarray:
        return sum(v**2 for v in self.mesh)

    def supports(self, order: int) -> bool:
        return self.points_per_axis >= 2 * order + 2

    def check_order(self, order: int) -> None:

        if not self.supports(order):
            raise ConfigurationError(
                "Velocity grid too coarse for the requested order",
                _input={"points_per_axis": self.points_per_axis, "order": order},
                _detail={"required_points_per_axis": 2 * order + 2},
            )

    def integrate(self, values: np.ndarray) -> float:
        """Periodic trapezoid quadrature over the box."""

        return float(np.sum(values) * self.cell_volume)


def project(
    samples: np.ndarray, order: int, grid: VelocityGrid | None = None
) -> SpectralField:
    """
    Function computes trigonometric interpolation coefficients truncated to |k_j| <= N
    Args:
        samples (np.ndarray): values on a uniform grid of shape (n_g,)*d
        order (int): order N of the result
        grid (VelocityGrid | None): grid the samples live on, checked against the shape
    Returns:
        SpectralField: projected field
    Raises:
        ConfigurationError: grid/order mismatch
    """

    samples = np.asarray(samples)
    dim = samples.ndim
    n = samples.shape[0]
    if grid is not None and samples.shape != (grid.points_per_axis,) * grid.dim:
        raise ConfigurationError(
            "Samples do not live on the given velocity grid",
            _input={"shape": list(samples.shape)},
            _detail={"grid": [grid.dim, grid.points_per_axis]},
        )
    if any(n_axis != n for n_axis in samples.shape):
        raise ConfigurationError(
            "Samples must be given on a grid with equal points per axis",
            _input={"shape": list(samples.shape)},
            _detail=None,
        )
    VelocityGrid(dim, n).check_order(order)
    if not np.all(np.isfinite(samples)):
        raise ArgumentError(
            "Samples must be finite", _input={"shape": list(samples.shape)}, _detail=None
        )
    spectrum = sp_fft.fftn(samples) / n**dim
    idx = np.arange(-order, order + 1) % n
    block = spectrum[np.ix_(*([idx] * dim))]
    return SpectralField(dim, order, block * _alternating_sign(dim, order))


def evaluate(field: SpectralField, grid: VelocityGrid) -> np.ndarray:
    """
    Function evaluates the trigonometric polynomial at grid nodes
    Args:
        field (SpectralField): field to evaluate
        grid (VelocityGrid): grid with n_g >= 2N+2
    Returns:
        np.ndarray: real values of shape (n_g,)*d
    """

    if grid.dim != field.dim:
        raise ConfigurationError(
            "Grid and field dimensions differ",
            _input={"grid_dim": grid.dim, "field_dim": field.dim},
            _detail=None,
        )
    grid.check_order(field.order)
    n = grid.points_per_axis
    spectrum = np.zeros((n,) * field.dim, dtype=np.complex128)
    idx = np.arange(-field.order, field.order + 1) % n
    spectrum[np.ix_(*([idx] * field.dim))] = field.coeffs * _alternating_sign(
        field.dim, field.order
    )
    return (sp_fft.ifftn(spectrum) * n**field.dim).real


def pad(field: SpectralField, new_order: int) -> SpectralField:
    """Embed P^N into P^N' (N' > N); new modes are zero."""

    if new_order <= field.order:
        raise ArgumentError(
            "Padding requires a strictly larger order",
            _input={"order": field.order, "new_order": new_order},
            _detail=None,
        )
    coeffs = np.zeros((side(new_order),) * field.dim, dtype=np.complex128)
    offset = new_order - field.order
    window = (slice(offset, offset + side(field.order)),) * field.dim
    coeffs[window] = field.coeffs
    return SpectralField(field.dim, new_order, coeffs)


def truncate(field: SpectralField, order: int) -> SpectralField:
    """Orthogonal projection of a field onto P^N for N <= field order."""

    if order > field.order or order < 1:
        raise ArgumentError(
            "Truncation order must be between 1 and the field order",
            _input={"order": field.order, "new_order": order},
            _detail=None,
        )
    offset = field.order - order
    window = (slice(offset, offset + side(order)),) * field.dim
    return SpectralField(field.dim, order, field.coeffs[window])


class NormKind(str, Enum):
    L2 = "L2"
    HR = "Hr"
    L1_GRID = "L1_grid"
    LINF_GRID = "Linf_grid"


def norm(
    field: SpectralField,
    kind: NormKind | str = NormKind.L2,
    r: float = 0.0,
    grid: VelocityGrid | None = None,
) -> float:
    """
    Function computes a norm of a field on [-pi, pi]^d
    Args:
        field (SpectralField): field to measure
        kind (NormKind | str): L2 and Hr via Parseval, L1_grid and Linf_grid via grid values
        r (float): Sobolev index for Hr, r >= 0
        grid (VelocityGrid | None): grid for grid norms, defaults to VelocityGrid.for_order
    Returns:
        float: nonnegative norm value
    """

    kind = NormKind(kind)
    scale = (2 * np.pi) ** (field.dim / 2)
    power = np.abs(field.coeffs) ** 2
    if kind is NormKind.L2:
        return float(scale * np.sqrt(power.sum()))
    if kind is NormKind.HR:
        if r < 0:
            raise ArgumentError(
                "Sobolev index must be nonnegative", _input={"r": r}, _detail=None
            )
        weights = (1.0 + _squared_wavenumber(field.dim, field.order)) ** r
        return float(scale * np.sqrt((weights * power).sum()))
    grid = grid or VelocityGrid.for_order(field.dim, field.order)
    values = np.abs(evaluate(field, grid))
    if kind is NormKind.L1_GRID:
        return grid.integrate(values)
    return float(values.max())
