import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.common.exceptions.spectral_exceptions import (
    ArgumentError,
    CacheFormatError,
    CacheInvalidError,
)
from app.dto.kernel_dto import AngularKernel, KernelConfig
from app.spectral.kernel import (
    HASH_SIZE,
    HEADER_DTYPE,
    MAGIC,
    build_table,
    compute_beta,
    compute_mode,
    load_table,
    radial_rule,
    save_table,
    sphere_rule,
)
from app.spectral.spectral_core import wavenumbers


def test_header_layout():
    assert len(MAGIC) == 8
    assert HEADER_DTYPE.itemsize == 76


def test_default_quadrature_parameters():
    config = KernelConfig(dim=2, order=8)
    assert config.support_radius == pytest.approx(2 * (2 / (3 + math.sqrt(2))) * math.pi)
    assert config.radial_nodes >= 32
    assert config.angular_nodes_q % 2 == 0
    assert config.angular_nodes_q == config.angular_nodes_omega
    assert KernelConfig(dim=2, order=16).angular_nodes_q > config.angular_nodes_q
    explicit = KernelConfig(dim=2, order=8, radial_nodes=40, angular_nodes_q=48)
    assert explicit.radial_nodes == 40
    assert explicit.angular_nodes_q == 48


def test_config_validation():
    with pytest.raises(ValidationError):
        KernelConfig(dim=2, order=8, vhs_exponent=1.5)
    with pytest.raises(ValidationError):
        KernelConfig(dim=4, order=8)
    with pytest.raises(ValidationError):
        KernelConfig(dim=2, order=8, angular_nodes_omega=33)
    with pytest.raises(ValidationError):
        AngularKernel(kind="tabulated", cos_theta=(0.5, -0.5), values=(1.0, 1.0))
    with pytest.raises(ValidationError):
        AngularKernel(kind="isotropic", values=(1.0,))


def test_config_hash_ignores_refinement_settings():
    config = KernelConfig(dim=2, order=4)
    assert config.config_hash == config.model_copy(
        update={"refinement_tolerance": 1e-4}
    ).config_hash
    assert config.config_hash != KernelConfig(dim=2, order=4, vhs_exponent=0.5).config_hash


def test_sphere_rules_are_symmetric():
    for dim, nodes in ((2, 12), (3, 8)):
        points, weights = sphere_rule(dim, nodes)
        half = len(points) // 2
        assert np.array_equal(points[half:], -points[:half])
        assert weights.sum() == pytest.approx(2 * np.pi if dim == 2 else 4 * np.pi)
        assert np.allclose(np.linalg.norm(points, axis=1), 1.0)


def test_radial_rule_integrates_power():
    config = KernelConfig(dim=2, order=4, vhs_exponent=0.5)
    rho, weights = radial_rule(config)
    R = config.support_radius
    assert weights.sum() == pytest.approx(R**2.5 / 2.5, rel=1e-12)
    assert np.all((rho > 0) & (rho < R))


def test_mode_at_origin_is_ball_volume():
    config = KernelConfig(dim=2, order=16)
    R = config.support_radius
    assert abs(compute_mode(config, (0, 0), (0, 0)) - np.pi * R**2) < 1e-10
    config_3d = KernelConfig(dim=3, order=2)
    R = config_3d.support_radius
    assert abs(compute_mode(config_3d, (0, 0, 0), (0, 0, 0)) - 4 * np.pi * R**3 / 3) < 1e-10


def test_hard_sphere_like_mode_at_origin():
    config = KernelConfig(dim=2, order=4, vhs_exponent=0.5)
    R = config.support_radius
    assert abs(compute_mode(config, (0, 0), (0, 0)) - 2 * np.pi * R**2.5 / 2.5) < 1e-10


def test_compute_mode_rejects_bad_index():
    config = KernelConfig(dim=2, order=2)
    with pytest.raises(ArgumentError):
        compute_mode(config, (3, 0), (0, 0))
    with pytest.raises(ArgumentError):
        compute_mode(config, (0, 0, 0), (0, 0))


def test_beta_diagonal_is_exact_zero(maxwell_table_8, maxwell_table_3d):
    assert np.all(np.diag(maxwell_table_8.modes) == 0)
    assert np.all(np.diag(maxwell_table_3d.modes) == 0)
    assert compute_beta(maxwell_table_8.config, (2, -1), (2, -1)) == 0


def test_table_matches_pointwise_modes(maxwell_table_8):
    config = maxwell_table_8.config
    for l, m in (((1, 2), (-3, 0)), ((8, -8), (0, 5)), ((-4, 4), (4, -4))):
        assert abs(maxwell_table_8.beta(l, m) - compute_beta(config, l, m)) < 1e-12


def test_mass_modes_vanish(maxwell_table_8, maxwell_table_3d):
    k8 = wavenumbers(2, 8)
    values = [abs(maxwell_table_8.beta(tuple(l), tuple(-l))) for l in k8]
    assert max(values) < 1e-12
    k3 = wavenumbers(3, 2)
    values = [abs(maxwell_table_3d.beta(tuple(l), tuple(-l))) for l in k3]
    assert max(values) < 1e-12


def test_modes_reflection_symmetry(maxwell_table_4):
    # B(-l, -m) = conj(B(l, m)) for real kernels
    modes = maxwell_table_4.modes
    flipped = modes[::-1, ::-1]
    assert np.max(np.abs(flipped - np.conj(modes))) < 1e-12


def test_refinement_check_passes(maxwell_table_8, maxwell_table_3d):
    for table in (maxwell_table_8, maxwell_table_3d):
        assert table.refinement_discrepancy <= 1e-8
        assert len(table.worst_pair) == 2


def test_tabulated_constant_kernel_matches_isotropic():
    constant = 1 / (2 * np.pi)
    isotropic = KernelConfig(dim=2, order=2, radial_nodes=32, angular_nodes_q=32)
    tabulated = isotropic.model_copy(
        update={
            "angular_kernel": AngularKernel(
                kind="tabulated", cos_theta=(-1.0, 1.0), values=(constant, constant)
            )
        }
    )
    a = build_table(isotropic)
    b = build_table(tabulated)
    assert np.max(np.abs(a.modes - b.modes)) < 1e-12
    assert a.checksum != b.checksum


def test_cache_roundtrip(tmp_path, maxwell_table_8):
    path = save_table(maxwell_table_8, tmp_path / "table.bkmt")
    assert path.stat().st_size == 8 + 76 + 16 * 17**4 + HASH_SIZE
    loaded = load_table(path, maxwell_table_8.config)
    assert np.array_equal(loaded.modes, maxwell_table_8.modes)
    assert loaded.checksum == maxwell_table_8.checksum


def test_rebuild_is_deterministic(tmp_path):
    config = KernelConfig(dim=2, order=3)
    first = save_table(build_table(config), tmp_path / "a.bkmt").read_bytes()
    second = save_table(build_table(config), tmp_path / "b.bkmt").read_bytes()
    assert first[-HASH_SIZE:] == second[-HASH_SIZE:]
    assert first == second


def test_cache_mismatch_and_corruption(tmp_path, maxwell_table_4):
    path = save_table(maxwell_table_4, tmp_path / "table.bkmt")
    raw = path.read_bytes()

    with pytest.raises(CacheInvalidError):
        load_table(path, KernelConfig(dim=2, order=5))
    with pytest.raises(CacheInvalidError):
        load_table(path, maxwell_table_4.config.model_copy(update={"radial_nodes": 64}))

    corrupted = bytearray(raw)
    corrupted[200] ^= 0xFF
    path.write_bytes(bytes(corrupted))
    with pytest.raises(CacheFormatError):
        load_table(path, maxwell_table_4.config)

    path.write_bytes(raw[:-100])
    with pytest.raises(CacheFormatError):
        load_table(path, maxwell_table_4.config)

    path.write_bytes(b"NOTATABL" + raw[8:])
    with pytest.raises(CacheFormatError):
        load_table(path, maxwell_table_4.config)
