"""
Boltzmann kernel modes of the truncated VHS collision kernel.

    B(l, m) = int_{|q| <= R_q} int_{S^{d-1}} |q|^lambda b(cos theta) exp(-i (l.q+ + m.q-)) dw dq
    beta(l, m) = B(l, m) - B(m, m)

With q = rho * sigma the phase splits as l.q+ + m.q- = rho/2 (l+m).sigma + rho/2 (l-m).w,
so for isotropic b the product rule factorises into angular sums of the vectors
k = l + m and j = l - m, each computed once and contracted over radial nodes.
"""

import hashlib
import math
import time
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from loguru import logger
from scipy import special

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    CacheFormatError,
    CacheInvalidError,
    QuadratureBuildError,
)
from app.dto.kernel_dto import AngularKernel, KernelConfig
from app.spectral.spectral_core import wavenumbers

MAGIC = b"BKMT0001"
HEADER_DTYPE = np.dtype(
    [
        ("dim", "<u4"),
        ("order", "<u4"),
        ("vhs_exponent", "<f8"),
        ("support_radius", "<f8"),
        ("radial_nodes", "<u4"),
        ("angular_nodes_q", "<u4"),
        ("angular_nodes_omega", "<u4"),
        ("angular_kernel_tag", "<u4"),
        ("angular_kernel_samples", "<u4"),
        ("config_hash", "V32"),
    ]
)
HASH_SIZE = 32

# blocks bound temporary memory; results do not depend on the block sizes
_VECTOR_CHUNK = 64
_ROW_CHUNK = 16
_GATHER_CHUNK_ELEMENTS = 4_000_000

__all__ = [
    "AngularKernel",
    "KernelConfig",
    "KernelTable",
    "build_table",
    "compute_mode",
    "load_table",
    "save_table",
]


def radial_rule(config: KernelConfig) -> tuple[np.ndarray, np.ndarray]:
    """
    Function returns radial nodes on [0, R_q] and weights including rho^(lambda + d - 1)
    Args:
        config (KernelConfig): kernel configuration
    Returns:
        tuple[np.ndarray, np.ndarray]: nodes and weights
    """

    power = config.vhs_exponent + config.dim - 1
    half = 0.5 * config.support_radius
    if float(power).is_integer():
        x, w = np.polynomial.legendre.leggauss(config.radial_nodes)
        rho = half * (x + 1.0)
        return rho, half * w * rho**power
    # Gauss-Jacobi absorbs the fractional power, the integrand stays smooth
    x, w = special.roots_jacobi(config.radial_nodes, 0.0, power)
    rho = half * (x + 1.0)
    return rho, half ** (power + 1.0) * w


def sphere_rule(dim: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Function returns a quadrature on S^{d-1} whose second half is the exact negation of
    the first half
    Args:
        dim (int): 2 for the circle (trapezoid), 3 for the sphere (Gauss in cos theta x trapezoid in phi)
        nodes (int): even number of trapezoid nodes
    Returns:
        tuple[np.ndarray, np.ndarray]: points of shape (P, d) and weights of shape (P,)
    """

    half = nodes // 2
    phi = 2.0 * np.pi * np.arange(half) / nodes
    if dim == 2:
        points = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.full(half, 2.0 * np.pi / nodes)
    else:
        cos_theta, polar_w = np.polynomial.legendre.leggauss(max(half, 1))
        sin_theta = np.sqrt(1.0 - cos_theta**2)
        points = np.stack(
            [
                np.outer(sin_theta, np.cos(phi)).ravel(),
                np.outer(sin_theta, np.sin(phi)).ravel(),
                np.repeat(cos_theta, half),
            ],
            axis=-1,
        )
        weights = np.repeat(polar_w, half) * (2.0 * np.pi / nodes)
    return np.concatenate([points, -points]), np.concatenate([weights, weights])


@dataclass(frozen=True)
class _Quadrature:
    radii: np.ndarray
    radial_weights: np.ndarray
    q_points: np.ndarray
    q_weights: np.ndarray
    w_points: np.ndarray
    w_weights: np.ndarray
    angular_kernel: AngularKernel
    dim: int

    @classmethod
    def from_config(cls, config: KernelConfig) -> "_Quadrature":

        radii, radial_weights = radial_rule(config)
        q_points, q_weights = sphere_rule(config.dim, config.angular_nodes_q)
        w_points, w_weights = sphere_rule(config.dim, config.angular_nodes_omega)
        return cls(
            radii,
            radial_weights,
            q_points,
            q_weights,
            w_points,
            w_weights,
            config.angular_kernel,
            config.dim,
        )

    @property
    def isotropic(self) -> bool:
        return self.angular_kernel.kind == "isotropic"

    def exponentials(
        self, vectors: np.ndarray, points: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        # weights * exp(-i rho/2 v.p), shape (K, radial, P)
        proj = (vectors[:, None, :] * points[None, :, :]).sum(axis=-1)
        phase = 0.5 * self.radii[None, :, None] * proj[:, None, :]
        return np.exp(-1j * phase) * weights

    def angular_sums(
        self, vectors: np.ndarray, points: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        out = np.empty((len(vectors), len(self.radii)), dtype=np.complex128)
        for start in range(0, len(vectors), _VECTOR_CHUNK):
            block = vectors[start : start + _VECTOR_CHUNK]
            out[start : start + _VECTOR_CHUNK] = self.exponentials(
                block, points, weights
            ).sum(axis=-1)
        return out

    @cached_property
    def coupling(self) -> np.ndarray:
        # b(sigma.w) as (P_w, P_q), reduction axis last
        cos_theta = self.w_points @ self.q_points.T
        return self.angular_kernel.evaluate(cos_theta, self.dim)

    def coupled_sums(self, vectors: np.ndarray) -> np.ndarray:
        # G[k, r, w] = sum_sigma b(sigma.w) w_sigma exp(-i rho/2 k.sigma), shape (K, radial, P_w)
        out = np.empty(
            (len(vectors), len(self.radii), len(self.w_points)), dtype=np.complex128
        )
        for start in range(0, len(vectors), _ROW_CHUNK):
            block = self.exponentials(
                vectors[start : start + _ROW_CHUNK], self.q_points, self.q_weights
            )
            out[start : start + _ROW_CHUNK] = (
                block[:, :, None, :] * self.coupling[None, None, :, :]
            ).sum(axis=-1)
        return out

    def vector_factors(self, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Factors of the sum and difference vectors, contracted by contract()."""

        if self.isotropic:
            b0 = self.angular_kernel.evaluate(np.zeros(1), self.dim)[0]
            return (
                self.angular_sums(vectors, self.q_points, self.q_weights),
                self.angular_sums(vectors, self.w_points, self.w_weights * b0),
            )
        return self.coupled_sums(vectors), self.exponentials(
            vectors, self.w_points, self.w_weights
        )

    def contract(self, sum_rows: np.ndarray, diff_rows: np.ndarray) -> np.ndarray:
        if self.isotropic:
            return (sum_rows * diff_rows * self.radial_weights).sum(axis=-1)
        return ((sum_rows * diff_rows).sum(axis=-1) * self.radial_weights).sum(axis=-1)


def _vector_index(vectors: np.ndarray, reach: int) -> np.ndarray:
    # row-major linear index of integer vectors with components in [-reach, reach]
    width = 2 * reach + 1
    index = np.zeros(vectors.shape[:-1], dtype=np.int64)
    for axis in range(vectors.shape[-1]):
        index = index * width + (vectors[..., axis] + reach)
    return index


def _modes_for_pairs(
    quadrature: _Quadrature, l_vectors: np.ndarray, m_vectors: np.ndarray
) -> np.ndarray:
    sums = l_vectors + m_vectors
    diffs = l_vectors - m_vectors
    vectors = np.concatenate([sums, diffs])
    reach = int(np.abs(vectors).max(initial=0))
    _, first, inverse = np.unique(
        _vector_index(vectors, reach), return_index=True, return_inverse=True
    )
    inverse = inverse.ravel()
    sum_factors, diff_factors = quadrature.vector_factors(
        vectors[first].astype(np.float64)
    )
    return quadrature.contract(
        sum_factors[inverse[: len(sums)]], diff_factors[inverse[len(sums) :]]
    )


def compute_mode(
    config: KernelConfig, l: tuple[int, ...] | list[int], m: tuple[int, ...] | list[int]
) -> complex:
    """
    Function computes the quadrature approximation of B(l, m)
    Args:
        config (KernelConfig): kernel configuration
        l (tuple[int, ...]): multi-index with |l_j| <= N
        m (tuple[int, ...]): multi-index with |m_j| <= N
    Returns:
        complex: B(l, m)
    """

    l_vec = np.asarray(l, dtype=np.int64).reshape(1, -1)
    m_vec = np.asarray(m, dtype=np.int64).reshape(1, -1)
    for name, vec in (("l", l_vec), ("m", m_vec)):
        if vec.shape[1] != config.dim or np.abs(vec).max() > config.order:
            raise ArgumentError(
                f"Multi-index {name} outside of P^N",
                _input={name: vec.ravel().tolist()},
                _detail={"dim": config.dim, "order": config.order},
            )
    return complex(_modes_for_pairs(_Quadrature.from_config(config), l_vec, m_vec)[0])


def compute_beta(
    config: KernelConfig, l: tuple[int, ...] | list[int], m: tuple[int, ...] | list[int]
) -> complex:
    if tuple(l) == tuple(m):
        return 0j
    return compute_mode(config, l, m) - compute_mode(config, m, m)


@dataclass(frozen=True)
class ConvolutionPairs:
    """Admissible (l, m) with l + m inside P^N, in row-major (l, m) order."""

    l_index: np.ndarray
    m_index: np.ndarray
    k_index: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class KernelTable:
    """
    Precomputed kernel modes beta(l, m).
    Attributes:
        config (KernelConfig): configuration the table was built with
        modes (np.ndarray): complex array of shape ((2N+1)^d, (2N+1)^d), rows l, columns m
        checksum (bytes): sha256 of the configuration
        refinement_discrepancy (float | None): worst sampled change under node doubling
        worst_pair (tuple | None): (l, m) with the worst discrepancy
    """

    config: KernelConfig
    modes: np.ndarray
    checksum: bytes
    refinement_discrepancy: float | None = None
    worst_pair: tuple[list[int], list[int]] | None = None

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def order(self) -> int:
        return self.config.order

    def beta(self, l: tuple[int, ...], m: tuple[int, ...]) -> complex:
        return complex(self.modes[_flat_index(l, self.order), _flat_index(m, self.order)])

    @cached_property
    def convolution(self) -> ConvolutionPairs:

        k = wavenumbers(self.dim, self.order).astype(np.int16)
        sums = k[:, None, :] + k[None, :, :]
        admissible = np.all(np.abs(sums) <= self.order, axis=-1)
        l_index, m_index = np.nonzero(admissible)
        k_index = _vector_index(sums[l_index, m_index].astype(np.int64), self.order)
        return ConvolutionPairs(
            l_index, m_index, k_index, self.modes[l_index, m_index]
        )

    @cached_property
    def max_abs_mode(self) -> float:
        return float(np.abs(self.modes).max())


def _flat_index(k: tuple[int, ...], order: int) -> int:
    return int(_vector_index(np.asarray(k, dtype=np.int64), order))


def build_table(config: KernelConfig) -> KernelTable:
    """
    Function computes all kernel modes beta(l, m) and runs the node-doubling refinement check
    Args:
        config (KernelConfig): kernel configuration
    Returns:
        KernelTable: the table with refinement metadata
    Raises:
        QuadratureBuildError: sampled discrepancy above config.refinement_tolerance
    """

    started = time.perf_counter()
    logger.info(
        f"Building kernel table d={config.dim} N={config.order} "
        f"lambda_vhs={config.vhs_exponent} R_q={config.support_radius:.6f} "
        f"nodes=({config.radial_nodes}, {config.angular_nodes_q}, {config.angular_nodes_omega})"
    )
    quadrature = _Quadrature.from_config(config)
    k = wavenumbers(config.dim, config.order).astype(np.int64)
    reach = 2 * config.order
    axis = np.arange(-reach, reach + 1)
    vectors = np.stack(
        [g.ravel() for g in np.meshgrid(*([axis] * config.dim), indexing="ij")],
        axis=-1,
    )
    sum_factors, diff_factors = quadrature.vector_factors(vectors.astype(np.float64))

    size = len(k)
    per_pair = sum_factors[0].size + diff_factors[0].size
    row_chunk = max(1, _GATHER_CHUNK_ELEMENTS // (size * per_pair))
    raw = np.empty((size, size), dtype=np.complex128)
    for start in range(0, size, row_chunk):
        rows = k[start : start + row_chunk]
        sum_index = _vector_index(rows[:, None, :] + k[None, :, :], reach)
        diff_index = _vector_index(rows[:, None, :] - k[None, :, :], reach)
        raw[start : start + row_chunk] = quadrature.contract(
            sum_factors[sum_index], diff_factors[diff_index]
        )
    modes = raw - np.diag(raw)[None, :]
    np.fill_diagonal(modes, 0.0)

    discrepancy, worst = _refinement_check(config, k, raw)
    logger.info(
        f"Kernel table built in {time.perf_counter() - started:.2f}s, "
        f"worst refinement discrepancy {discrepancy:.3e} at {worst}"
    )
    if discrepancy > config.refinement_tolerance:
        raise QuadratureBuildError(
            "Kernel quadrature did not pass the refinement check",
            _input=config.model_dump(),
            _detail={
                "discrepancy": discrepancy,
                "tolerance": config.refinement_tolerance,
                "worst_pair": worst,
            },
        )
    return KernelTable(config, modes, config.config_hash, discrepancy, worst)


def _refinement_check(
    config: KernelConfig, k: np.ndarray, raw: np.ndarray
) -> tuple[float, tuple[list[int], list[int]]]:

    pairs = raw.size
    count = max(1, math.ceil(config.refinement_fraction * pairs))
    rng = np.random.default_rng(int.from_bytes(config.config_hash[:8], "little"))
    sample = np.sort(rng.choice(pairs, size=count, replace=False))
    rows, cols = np.divmod(sample, raw.shape[1])
    refined = _modes_for_pairs(
        _Quadrature.from_config(config.doubled()), k[rows], k[cols]
    )
    errors = np.abs(refined - raw[rows, cols])
    worst = int(np.argmax(errors))
    return float(errors[worst]), (k[rows[worst]].tolist(), k[cols[worst]].tolist())


def save_table(table: KernelTable, path: Path | str) -> Path:
    """
    Function writes a table in the BKMT0001 cache format
    Args:
        table (KernelTable): table to save
        path (Path | str): destination file
    Returns:
        Path: written file
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    config = table.config
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["dim"] = config.dim
    header["order"] = config.order
    header["vhs_exponent"] = config.vhs_exponent
    header["support_radius"] = config.support_radius
    header["radial_nodes"] = config.radial_nodes
    header["angular_nodes_q"] = config.angular_nodes_q
    header["angular_nodes_omega"] = config.angular_nodes_omega
    header["angular_kernel_tag"] = config.angular_kernel.tag
    header["angular_kernel_samples"] = config.angular_kernel.sample_count
    header["config_hash"] = np.void(table.checksum)
    payload = np.ascontiguousarray(table.modes, dtype="<c16").tobytes()
    trailer = hashlib.sha256(payload).digest()
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "wb") as fout:
        fout.write(MAGIC)
        fout.write(header.tobytes())
        fout.write(payload)
        fout.write(trailer)
    tmp_path.replace(path)
    return path


def load_table(path: Path | str, expected: KernelConfig) -> KernelTable:
    """
    Function loads a cached table and checks it against the expected configuration
    Args:
        path (Path | str): cache file
        expected (KernelConfig): configuration the caller needs
    Returns:
        KernelTable: loaded table without refinement metadata
    Raises:
        CacheFormatError: bad magic, truncated file or payload hash mismatch
        CacheInvalidError: header or config hash does not match expected
    """

    path = Path(path)
    raw = path.read_bytes()
    head = len(MAGIC) + HEADER_DTYPE.itemsize
    if len(raw) < head + HASH_SIZE or raw[: len(MAGIC)] != MAGIC:
        raise CacheFormatError(
            "Kernel cache file has an invalid header",
            _input={"path": str(path)},
            _detail={"size": len(raw), "magic": raw[: len(MAGIC)].hex()},
        )
    header = np.frombuffer(raw[len(MAGIC) : head], dtype=HEADER_DTYPE)[0]
    stored = {
        "dim": int(header["dim"]),
        "order": int(header["order"]),
        "vhs_exponent": float(header["vhs_exponent"]),
        "support_radius": float(header["support_radius"]),
        "radial_nodes": int(header["radial_nodes"]),
        "angular_nodes_q": int(header["angular_nodes_q"]),
        "angular_nodes_omega": int(header["angular_nodes_omega"]),
        "angular_kernel_tag": int(header["angular_kernel_tag"]),
        "angular_kernel_samples": int(header["angular_kernel_samples"]),
    }
    wanted = {
        "dim": expected.dim,
        "order": expected.order,
        "vhs_exponent": expected.vhs_exponent,
        "support_radius": expected.support_radius,
        "radial_nodes": expected.radial_nodes,
        "angular_nodes_q": expected.angular_nodes_q,
        "angular_nodes_omega": expected.angular_nodes_omega,
        "angular_kernel_tag": expected.angular_kernel.tag,
        "angular_kernel_samples": expected.angular_kernel.sample_count,
    }
    checksum = bytes(header["config_hash"])
    if stored != wanted or checksum != expected.config_hash:
        raise CacheInvalidError(
            "Kernel cache does not match the requested configuration",
            _input={"path": str(path)},
            _detail={"stored": stored, "expected": wanted},
        )
    size = expected.table_side
    payload_size = 16 * size * size
    if len(raw) != head + payload_size + HASH_SIZE:
        raise CacheFormatError(
            "Kernel cache file is truncated",
            _input={"path": str(path)},
            _detail={"size": len(raw), "expected": head + payload_size + HASH_SIZE},
        )
    payload = raw[head : head + payload_size]
    if hashlib.sha256(payload).digest() != raw[head + payload_size :]:
        raise CacheFormatError(
            "Kernel cache payload hash mismatch",
            _input={"path": str(path)},
            _detail=None,
        )
    modes = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return KernelTable(expected, modes.reshape(size, size), checksum)
