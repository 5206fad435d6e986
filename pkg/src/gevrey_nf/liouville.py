"""Change of independent variable near an order-M zero of Q.

``z = A (integral_0^x sqrt(-Q))^(2/(M+2))`` with ``A = (M+2)^(2/(M+2))``
turns the leading part of Q into ``-z^M/4``. This module builds z(x), its
inverse x(z), the transformed perturbation ``Q1~(z, h)``, and the
scaling factor psi.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .series import (
    HSeries,
    ZSeries,
    compose,
    differentiate,
    h_shift,
    reciprocal,
    revert,
    unit_power,
)

LEADING_ZERO_TOL = 1e-14


@dataclass(frozen=True)
class PotentialSpec:
    """Problem input: Q(x) with an order-M zero at 0 and the table of Q1_n(x).

    ``q`` and every row of ``q1`` share the z-order ``nz``; ``q1`` has h-order ``nh``.
    """

    M: int
    q: ZSeries
    q1: HSeries

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        c = self.q.coeffs
        if self.q.order < self.M:
            raise ValueError(f"Q must be stored to at least order M={self.M}")
        if np.any(np.abs(c[: self.M]) >= LEADING_ZERO_TOL):
            raise ValueError("Q(0) = ... = Q^(M-1)(0) = 0 is violated")
        if c[self.M] == 0:
            raise ValueError("Q^(M)(0) must be nonzero")
        if self.q1.z_order != self.q.order:
            raise ValueError("Q1 table z-order must match Q")

    @property
    def nh(self) -> int:
        return self.q1.h_order

    @property
    def nz(self) -> int:
        return self.q.order

    @classmethod
    def from_coefficients(cls, M, q, q1_rows, nh, nz) -> "PotentialSpec":
        """Build from polynomial coefficient lists (exact zero-extension)."""
        qz = ZSeries.from_poly(q, nz)
        rows = [ZSeries.from_poly(r, nz) for r in q1_rows[: nh + 1]]
        rows += [ZSeries.zero(nz)] * (nh + 1 - len(rows))
        return cls(M=M, q=qz, q1=HSeries.from_zseries(rows))


@dataclass(frozen=True)
class Monomial:
    """``coef * x**exponent`` with a rational exponent, never stored in a ZSeries."""

    coef: complex
    exponent: Fraction

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.coef * other.coef, self.exponent + other.exponent)

    def power(self, p: Fraction) -> "Monomial":
        # principal branch of the constant
        return Monomial(complex(self.coef) ** (p.numerator / p.denominator), self.exponent * p)

    def integer_exponent(self) -> int:
        if self.exponent.denominator != 1:
            raise AssertionError(f"non-integer residual exponent {self.exponent} survived")
        return int(self.exponent)


@dataclass(frozen=True)
class TransformData:
    M: int
    A_const: float
    z_of_x: ZSeries
    x_of_z: ZSeries
    dz_dx: ZSeries
    dx_dz: ZSeries
    d2x_dz2: ZSeries
    d3x_dz3: ZSeries
    q1_tilde: HSeries
    z_exponent: Fraction

    @property
    def nz(self) -> int:
        return self.q1_tilde.z_order


def liouville_constant(M: int) -> float:
    return float((M + 2) ** (2.0 / (M + 2)))


def exponent_audit(M: int) -> dict:
    """Leading power of x in z(x) for the two candidate exponents.

    The integral of sqrt(-Q) starts at x^((M+2)/2); z(x) is analytic with
    z'(0) != 0 only when the exponent maps that to x^1.
    """
    lead = Fraction(M + 2, 2)
    out = {}
    for label, p in (("2/(M+2)", Fraction(2, M + 2)), ("M/(M+2)", Fraction(M, M + 2))):
        e = lead * p
        out[label] = {"leading_power": str(e), "invertible_analytic": e == 1}
    return out


def compute_z_of_x(spec: PotentialSpec) -> ZSeries:
    """z(x) as a Taylor series with z(0) = 0 and z'(0) != 0.

    Output order is ``spec.nz - M + 1``: dividing Q by x^M costs M orders and
    multiplying the unit part by x restores one.
    """
    M = spec.M
    qM = complex(spec.q.coeffs[M])
    unit = ZSeries(-spec.q.coeffs[M:] / (-qM))  # -Q = (-q_M) x^M * unit
    root = unit_power(unit, Fraction(1, 2))
    pref = Monomial(complex(-qM) ** 0.5, Fraction(M, 2))
    # integrate x^(M/2) * sum c_k x^k termwise
    k = np.arange(root.order + 1)
    new_exp = pref.exponent + 1
    W = root.coeffs / (k + float(new_exp))
    w0 = W[0]
    integral = Monomial(pref.coef * w0, new_exp)
    p = Fraction(2, M + 2)
    z_mono = integral.power(p)
    z_unit = unit_power(ZSeries(W / w0), p)
    A = liouville_constant(M)
    shift = z_mono.integer_exponent()
    assert shift == 1
    c = np.zeros(z_unit.order + 2, dtype=np.complex128)
    c[1:] = A * z_mono.coef * z_unit.coeffs
    return ZSeries(c)


def jacobian_identity_residual(spec: PotentialSpec, x_of_z: ZSeries) -> ZSeries:
    """``(dx/dz)^2 Q(x(z)) + A^(-M-2) ((M+2)/2)^2 z^M`` (vanishes identically)."""
    M = spec.M
    dx = differentiate(x_of_z, 1)
    n = dx.order
    qx = compose(spec.q, x_of_z).truncate(n)
    lhs = dx * dx * qx
    c = lhs.coeffs.copy()
    if M <= n:
        c[M] += liouville_constant(M) ** (-M - 2) * ((M + 2) / 2.0) ** 2
    return ZSeries(c)


def compute_q1_tilde(spec: PotentialSpec, x_of_z: ZSeries) -> HSeries:
    """``(dx/dz)^2 Q1(x(z), h) - (h/2) {x, z}`` with the Schwarzian
    ``{x, z} = x'''/x' - (3/2) (x''/x')^2``.

    Output orders: h-order ``spec.nh``, z-order ``x_of_z.order - 3``.
    """
    n = x_of_z.order - 3
    if n < 0:
        raise ValueError("x(z) must be known to at least order 3")
    d1 = differentiate(x_of_z, 1).truncate(n)
    d2 = differentiate(x_of_z, 2).truncate(n)
    d3 = differentiate(x_of_z, 3)
    inv1 = reciprocal(d1)
    ratio2 = d2 * inv1
    schwarz = d3 * inv1 - 1.5 * ratio2 * ratio2
    q1x = compose(spec.q1, x_of_z).truncate(z_order=n)
    jac = HSeries.constant(d1 * d1, spec.nh)
    out = jac * q1x
    out = out - 0.5 * h_shift(HSeries.constant(schwarz, spec.nh), 1)
    return out


def liouville_transform(spec: PotentialSpec) -> TransformData:
    z = compute_z_of_x(spec)
    x = revert(z)
    q1t = compute_q1_tilde(spec, x)
    return TransformData(
        M=spec.M,
        A_const=liouville_constant(spec.M),
        z_of_x=z,
        x_of_z=x,
        dz_dx=differentiate(z, 1),
        dx_dz=differentiate(x, 1),
        d2x_dz2=differentiate(x, 2),
        d3x_dz3=differentiate(x, 3),
        q1_tilde=q1t,
        z_exponent=Fraction(2, spec.M + 2),
    )


def compose_h(T: HSeries, inner: ZSeries) -> HSeries:
    """Compose every h-coefficient of T with ``inner`` (inner(0) = 0)."""
    return compose(T, inner)


def assemble_y_of_x(td: TransformData, T: HSeries) -> HSeries:
    """``y(x, h) = z(x) + h T(z(x), h)``.

    The result keeps every term: h-order ``T.h_order + 1``, z-order
    ``min(T.z_order, z_of_x.order)``.
    """
    n = min(T.z_order, td.z_of_x.order)
    zx = td.z_of_x.truncate(n)
    Tx = compose(T.truncate(z_order=n), zx)
    y = h_shift(Tx, 1, h_order=T.h_order + 1)
    return y + HSeries.constant(zx, T.h_order + 1)


def psi_from_y(y: HSeries) -> HSeries:
    """``psi = (dx/dy)^(1/2) = (dy/dx)^(-1/2)``: the factor that removes the
    first-derivative term, with zero integration constant."""
    return unit_power(differentiate(y, 1), Fraction(-1, 2))


def compute_psi(td: TransformData, T: HSeries) -> HSeries:
    return psi_from_y(assemble_y_of_x(td, T))


def estimate_radius(p: ZSeries, tail_fraction: float = 0.5) -> float:
    """Root-test estimate of the radius of convergence from the upper coefficients."""
    c = np.abs(p.coeffs)
    n = c.shape[0]
    start = max(1, int(n * (1 - tail_fraction)))
    k = np.arange(start, n)
    vals = c[start:]
    mask = vals > 0
    if mask.sum() < 2:
        return float("inf")
    slope, _ = np.polyfit(k[mask], np.log(vals[mask]), 1)
    return float(np.exp(-slope))
