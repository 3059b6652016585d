"""Projected collision operator Q_N evaluated by direct summation over kernel modes."""

import numpy as np

from app.common.exceptions.spectral_exceptions import ArgumentError, BlowUpError
from app.spectral.kernel import KernelTable
from app.spectral.spectral_core import NormKind, SpectralField, norm, pad


def _check_operands(table: KernelTable, *fields: SpectralField) -> None:

    for field in fields:
        if field.dim != table.dim or field.order != table.order:
            raise ArgumentError(
                "Field does not match the kernel table",
                _input={"dim": field.dim, "order": field.order},
                _detail={"table_dim": table.dim, "table_order": table.order},
            )


def q_quadratic(f: SpectralField, g: SpectralField, table: KernelTable) -> SpectralField:
    """
    Function evaluates the bilinear spectral collision form
        Q_k = sum_{l + m = k} f_l g_m beta(l, m)
    Args:
        f (SpectralField): first argument
        g (SpectralField): second argument
        table (KernelTable): kernel modes of the same dimension and order
    Returns:
        SpectralField: Q_N(f, g)
    Raises:
        ArgumentError: order/dim mismatch
        BlowUpError: non-finite output
    """

    _check_operands(table, f, g)
    pairs = table.convolution
    products = f.coeffs.ravel()[pairs.l_index] * g.coeffs.ravel()[pairs.m_index]
    products = products * pairs.weights
    size = f.coeffs.size
    real = np.bincount(pairs.k_index, weights=products.real, minlength=size)
    imag = np.bincount(pairs.k_index, weights=products.imag, minlength=size)
    coeffs = real + 1j * imag
    if not np.all(np.isfinite(coeffs)):
        raise BlowUpError(
            "Collision operator produced non-finite coefficients",
            _input={"dim": f.dim, "order": f.order},
            _detail={"max_abs_f": float(np.abs(f.coeffs).max())},
        )
    return SpectralField(f.dim, f.order, coeffs)


def linearized(
    Mfield: SpectralField, g: SpectralField, table: KernelTable
) -> SpectralField:
    """L(M, g) = Q(g, M) + Q(M, g), linear in g."""

    return q_quadratic(g, Mfield, table) + q_quadratic(Mfield, g, table)


def ep_rhs(f: SpectralField, Mfield: SpectralField, table: KernelTable) -> SpectralField:
    """
    Right-hand side of the equilibrium preserving scheme
        d f_N / dt = P_N Q(f_N + M_N, f_N - M_N)
    with Q(a, b) symmetrised as (Q(a, b) + Q(b, a)) / 2, which equals
    P_N Q(f_N, f_N) - P_N Q(M_N, M_N). f = M_N gives an exact zero field,
    because f - M_N is the zero field in both terms.
    """

    plus, minus = f + Mfield, f - Mfield
    return (q_quadratic(plus, minus, table) + q_quadratic(minus, plus, table)) * 0.5


def perturbation_norm(
    f: SpectralField,
    Mfield: SpectralField,
    table_N: KernelTable,
    table_ref: KernelTable,
    r: float = 0.0,
) -> float:
    """
    Function measures the perturbation P_N(f, M) = P_N Q(f+M, f-M) - Q(f, f) in H^r,
    with the order N_ref >= 2N table standing in for the unprojected operator
    Args:
        f (SpectralField): state of order N
        Mfield (SpectralField): projected Maxwellian of order N
        table_N (KernelTable): kernel modes of order N
        table_ref (KernelTable): kernel modes of order N_ref
        r (float): Sobolev index
    Returns:
        float: ||pad(ep_rhs) - Q_ref(f, f) + Q_ref(M, M)||_{H^r}
    """

    if table_ref.order < 2 * table_N.order:
        raise ArgumentError(
            "Reference table order must be at least twice the field order",
            _input={"order": table_N.order, "reference_order": table_ref.order},
            _detail=None,
        )
    projected = pad(ep_rhs(f, Mfield, table_N), table_ref.order)
    f_ref = pad(f, table_ref.order)
    M_ref = pad(Mfield, table_ref.order)
    reference = q_quadratic(f_ref, f_ref, table_ref) - q_quadratic(
        M_ref, M_ref, table_ref
    )
    return norm(projected - reference, NormKind.HR, r=r)
