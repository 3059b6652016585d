import hashlib
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# support condition of the periodized operator: R_q = 2 * DEALIAS_FACTOR * pi
DEALIAS_FACTOR = 2.0 / (3.0 + math.sqrt(2.0))

_SPHERE_AREA = {2: 2.0 * math.pi, 3: 4.0 * math.pi}


def default_radial_nodes(dim: int, order: int, support_radius: float) -> int:
    band = support_radius * order * math.sqrt(dim)
    return max(32, math.ceil(band / 2 + 24))


def default_angular_nodes(dim: int, order: int, support_radius: float) -> int:
    band = support_radius * order * math.sqrt(dim)
    nodes = math.ceil(band + 11 * (band / 2) ** (1 / 3))
    return max(32, nodes + nodes % 2)


class AngularKernel(BaseModel):
    """
    Descriptor of the angular part b(cos theta) of the collision kernel.
    Isotropic kernels are normalized so that the sphere integral of b equals 1,
    tabulated kernels are linearly interpolated on the given cos theta samples.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["isotropic", "tabulated"] = Field(
        default="isotropic", examples=["isotropic"]
    )
    cos_theta: tuple[float, ...] | None = Field(
        default=None, description="Strictly increasing samples in [-1, 1]"
    )
    values: tuple[float, ...] | None = Field(
        default=None, description="Nonnegative values of b at cos_theta"
    )

    @model_validator(mode="after")
    def validate_table(self) -> "AngularKernel":
        if self.kind == "isotropic":
            if self.cos_theta is not None or self.values is not None:
                raise ValueError("Isotropic angular kernel takes no tabulated values")
            return self
        if self.cos_theta is None or self.values is None:
            raise ValueError("Tabulated angular kernel needs cos_theta and values")
        if len(self.cos_theta) != len(self.values) or len(self.values) < 2:
            raise ValueError("cos_theta and values must have equal length >= 2")
        cos_theta = np.asarray(self.cos_theta)
        if np.any(np.diff(cos_theta) <= 0) or cos_theta[0] < -1 or cos_theta[-1] > 1:
            raise ValueError("cos_theta must be strictly increasing within [-1, 1]")
        values = np.asarray(self.values)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("Angular kernel values must be finite and nonnegative")
        return self

    @property
    def tag(self) -> int:
        return 0 if self.kind == "isotropic" else 1

    @property
    def sample_count(self) -> int:
        return 0 if self.values is None else len(self.values)

    def evaluate(self, cos_theta: np.ndarray, dim: int) -> np.ndarray:
        if self.kind == "isotropic":
            return np.full(np.shape(cos_theta), 1.0 / _SPHERE_AREA[dim])
        return np.interp(cos_theta, self.cos_theta, self.values)


class KernelConfig(BaseModel):
    """
    Truncated VHS kernel and its quadrature. Node counts left out are resolved from
    the largest oscillation frequency R_q * N * sqrt(d) of the kernel mode integrand.
    """

    model_config = ConfigDict(frozen=True)

    dim: Literal[2, 3] = Field(examples=[2], description="Velocity dimension")
    order: int = Field(ge=1, le=64, examples=[8], description="Modes per half-axis N")
    vhs_exponent: float = Field(
        default=0.0, ge=0.0, le=1.0, description="VHS exponent, 0 for Maxwell molecules"
    )
    angular_kernel: AngularKernel = AngularKernel()
    dealias_factor: float = Field(default=DEALIAS_FACTOR, gt=0.0, le=1.0)
    support_radius: float = Field(gt=0.0, le=2 * math.pi)
    radial_nodes: int = Field(ge=2)
    angular_nodes_q: int = Field(ge=2)
    angular_nodes_omega: int = Field(ge=2)
    refinement_tolerance: float = Field(default=1e-8, gt=0.0)
    refinement_fraction: float = Field(default=0.01, gt=0.0, le=1.0)

    @model_validator(mode="before")
    @classmethod
    def fill_quadrature_defaults(cls, data):
        if not isinstance(data, dict):
            return data
        data = {key: value for key, value in data.items() if value is not None}
        factor = data.get("dealias_factor", DEALIAS_FACTOR)
        data.setdefault("support_radius", 2 * factor * math.pi)
        dim, order = data.get("dim"), data.get("order")
        if dim in (2, 3) and isinstance(order, int) and order >= 1:
            radius = float(data["support_radius"])
            data.setdefault("radial_nodes", default_radial_nodes(dim, order, radius))
            angular = default_angular_nodes(dim, order, radius)
            data.setdefault("angular_nodes_q", angular)
            data.setdefault("angular_nodes_omega", angular)
        return data

    @field_validator("angular_nodes_q", "angular_nodes_omega")
    @classmethod
    def validate_even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("Angular node counts must be even (symmetric node sets)")
        return v

    @property
    def table_side(self) -> int:
        return (2 * self.order + 1) ** self.dim

    @property
    def config_hash(self) -> bytes:
        """sha256 of everything that determines the kernel modes."""

        payload = self.model_dump_json(
            exclude={"refinement_tolerance", "refinement_fraction"}
        )
        return hashlib.sha256(payload.encode()).digest()

    def with_order(self, order: int) -> "KernelConfig":
        return self.model_copy(update={"order": order})

    def for_reference_order(self, reference_order: int) -> "KernelConfig":
        """Config at reference_order with node counts sufficient for it, for ladder tables."""

        radius = self.support_radius
        angular = default_angular_nodes(self.dim, reference_order, radius)
        return self.model_copy(
            update={
                "order": reference_order,
                "radial_nodes": max(
                    self.radial_nodes,
                    default_radial_nodes(self.dim, reference_order, radius),
                ),
                "angular_nodes_q": max(self.angular_nodes_q, angular),
                "angular_nodes_omega": max(self.angular_nodes_omega, angular),
            }
        )

    def doubled(self) -> "KernelConfig":
        return self.model_copy(
            update={
                "radial_nodes": 2 * self.radial_nodes,
                "angular_nodes_q": 2 * self.angular_nodes_q,
                "angular_nodes_omega": 2 * self.angular_nodes_omega,
            }
        )
