"""The functional F whose zeros give the canonical form, its derivative split
into ``F_nu * L_nu`` pieces, and residual checks.

With ``Y = z + h T``, ``P = sum_j E_j Y^j``, ``W = 1 + h T'`` and
``B_j = (Y^j - z^j) / h``::

    F = P - B_M/4 + T'(2 + hT')(hP - Y^M/4)
          - (h^2/2) T'''/W + (3h^3/4) T''^2/W^2 - Q1~

F vanishes exactly when ``y = z + hT`` and the ``E_j`` put the equation in
canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np

from .series import (
    HSeries,
    ZSeries,
    compose,
    differentiate,
    h_shift,
    h_unshift,
    reciprocal,
)


# --------------------------------------------------------------------------
# state and tangent vectors
# --------------------------------------------------------------------------

def _check_E(E, M, h_order):
    if len(E) != max(M - 1, 0):
        raise ValueError(f"expected {max(M - 1, 0)} E-series for M={M}, got {len(E)}")
    for e in E:
        if not e.is_scalar or e.h_order != h_order:
            raise ValueError("E_j must be scalar series sharing the h-order of T")


@dataclass(frozen=True)
class StatePoint:
    """The unknown ``(E_0, ..., E_{M-2}, T)``.

    ``E`` holds scalar HSeries (z-order 0); ``T`` carries ZSeries coefficients.
    """

    E: tuple
    T: HSeries
    M: int

    def __post_init__(self):
        object.__setattr__(self, "E", tuple(self.E))
        _check_E(self.E, self.M, self.T.h_order)

    @classmethod
    def zero(cls, M: int, h_order: int, z_order: int) -> "StatePoint":
        E = tuple(HSeries.zero(h_order, 0) for _ in range(M - 1))
        return cls(E, HSeries.zero(h_order, z_order), M)

    @property
    def nh(self) -> int:
        return self.T.h_order

    @property
    def nz(self) -> int:
        return self.T.z_order

    def truncate(self, h_order=None, z_order=None) -> "StatePoint":
        E = tuple(e.truncate(h_order=h_order) for e in self.E)
        return StatePoint(E, self.T.truncate(h_order, z_order), self.M)

    def extend(self, h_order=None, z_order=None) -> "StatePoint":
        E = tuple(e.extend(h_order=h_order) for e in self.E)
        return StatePoint(E, self.T.extend(h_order, z_order), self.M)

    def __add__(self, v: "TangentVector") -> "StatePoint":
        if not isinstance(v, TangentVector):
            return NotImplemented
        E = tuple(a + b for a, b in zip(self.E, v.dE))
        return StatePoint(E, self.T + v.dT, self.M)

    def __sub__(self, other):
        if isinstance(other, TangentVector):
            return self + (-other)
        if isinstance(other, StatePoint):
            return TangentVector(tuple(a - b for a, b in zip(self.E, other.E)), self.T - other.T)
        return NotImplemented

    def max_abs(self) -> float:
        vals = [self.T.max_abs()] + [e.max_abs() for e in self.E]
        return max(vals)


@dataclass(frozen=True)
class TangentVector:
    """A direction ``(dE_0, ..., dE_{M-2}, dT)`` in the state space."""

    dE: tuple
    dT: HSeries

    def __post_init__(self):
        object.__setattr__(self, "dE", tuple(self.dE))
        for e in self.dE:
            if not e.is_scalar or e.h_order != self.dT.h_order:
                raise ValueError("dE_j must be scalar series sharing the h-order of dT")

    @classmethod
    def zero(cls, M: int, h_order: int, z_order: int) -> "TangentVector":
        return cls(tuple(HSeries.zero(h_order, 0) for _ in range(M - 1)), HSeries.zero(h_order, z_order))

    @property
    def nh(self) -> int:
        return self.dT.h_order

    def __add__(self, other):
        return TangentVector(tuple(a + b for a, b in zip(self.dE, other.dE)), self.dT + other.dT)

    def __neg__(self):
        return TangentVector(tuple(-a for a in self.dE), -self.dT)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return TangentVector(tuple(a * c for a in self.dE), self.dT * c)

    __rmul__ = __mul__

    def truncate(self, h_order=None, z_order=None) -> "TangentVector":
        return TangentVector(tuple(e.truncate(h_order=h_order) for e in self.dE), self.dT.truncate(h_order, z_order))

    def extend(self, h_order=None, z_order=None) -> "TangentVector":
        return TangentVector(tuple(e.extend(h_order=h_order) for e in self.dE), self.dT.extend(h_order, z_order))

    def h_shift(self, k: int, h_order=None) -> "TangentVector":
        return TangentVector(tuple(h_shift(e, k, h_order) for e in self.dE), h_shift(self.dT, k, h_order))

    def max_abs(self) -> float:
        return max([self.dT.max_abs()] + [e.max_abs() for e in self.dE])

    def is_zero(self) -> bool:
        return not self.dT.coeffs.any() and not any(e.coeffs.any() for e in self.dE)


# --------------------------------------------------------------------------
# shared building blocks
# --------------------------------------------------------------------------

class _Blocks:
    """Series derived from a state, all at h-order ``nh`` and z-order ``n = nz - 3``."""

    def __init__(self, x: StatePoint):
        if x.nz < 3:
            raise ValueError("T must be known to z-order >= 3")
        self.M = M = x.M
        self.nh = nh = x.nh
        self.n = n = x.nz - 3
        T = x.T.truncate(z_order=n)
        self.T = T
        self.d1 = differentiate(x.T, 1).truncate(z_order=n)
        self.d2 = differentiate(x.T, 2).truncate(z_order=n)
        self.d3 = differentiate(x.T, 3)
        zvar = ZSeries.variable(n)
        self.zpow = [ZSeries.one(n)]
        for _ in range(M):
            self.zpow.append(self.zpow[-1] * zvar)
        # Y at h-order nh + 1 keeps (Y^j - z^j)/h exact at h-order nh
        Yx = h_shift(T, 1, nh + 1) + HSeries.constant(zvar, nh + 1)
        pows = [HSeries.one(nh + 1, n)]
        for _ in range(M):
            pows.append(pows[-1] * Yx)
        self.Ypow = [p.truncate(h_order=nh) for p in pows]
        self.B = [
            h_unshift(pows[j] - HSeries.constant(self.zpow[j], nh + 1), 1) for j in range(M + 1)
        ]
        self.E = [e.lift(n) for e in x.E]
        P = HSeries.zero(nh, n)
        for j, e in enumerate(self.E):
            P = P + e * self.Ypow[j]
        self.P = P
        # P_Y = sum_j j E_j Y^(j-1)
        PY = HSeries.zero(nh, n)
        for j in range(1, len(self.E)):
            PY = PY + j * (self.E[j] * self.Ypow[j - 1])
        self.PY = PY
        hT1 = h_shift(self.d1, 1)
        self.W = HSeries.one(nh, n) + hT1
        self.invW = reciprocal(self.W)
        self.two_plus = 2.0 + hT1  # 2 + hT'


def _h(a: HSeries, k: int) -> HSeries:
    return h_shift(a, k)


def eval_F(x: StatePoint, q1_tilde: HSeries) -> HSeries:
    """F at the state ``x``. Output orders: ``(x.nh, x.nz - 3)``.

    ``q1_tilde`` must reach at least those orders; it is truncated to them.
    """
    b = _Blocks(x)
    q1 = q1_tilde.truncate(b.nh, b.n)
    M = b.M
    F = b.P - 0.25 * b.B[M]
    F = F + b.d1 * b.two_plus * (_h(b.P, 1) - 0.25 * b.Ypow[M])
    F = F - 0.5 * _h(b.d3 * b.invW, 2)
    F = F + 0.75 * _h(b.d2 * b.d2 * b.invW * b.invW, 3)
    return F - q1


# --------------------------------------------------------------------------
# derivative: sum over nu of F_nu(x) L_nu(v)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivativePiece:
    nu: int
    F: HSeries
    label: str  # which component of v enters: "E<j>", "T", "T'", "T''", "T'''"


def derivative_pieces(x: StatePoint) -> list:
    """The pieces ``nu = 2, ..., M+5``. The ``nu = 1`` piece is ``L1`` with ``F_1 = 1``.

    ``nu = 2..M`` multiply ``dE_j`` (``h`` times a hatted form), ``M+1`` multiplies
    ``dT``, ``M+2`` multiplies ``dT'`` (both ``h``-prefixed), and ``M+3..M+5``
    multiply ``dT'``, ``dT''``, ``dT'''`` with ``h^2`` or higher in front.
    """
    b = _Blocks(x)
    M = b.M
    out = []
    # F_{2+j} = h (B_j + T'(2 + hT') Y^j)
    for j in range(M - 1):
        hat = b.B[j] + b.d1 * b.two_plus * b.Ypow[j]
        out.append(DerivativePiece(2 + j, _h(hat, 1), f"E{j}"))
    # F_{M+1} = h (W^2 P_Y - (M/4) B_{M-1} - (M/4) T'(2 + hT') Y^(M-1))
    hat = b.W * b.W * b.PY - (M / 4.0) * b.B[M - 1] - (M / 4.0) * (b.d1 * b.two_plus * b.Ypow[M - 1])
    out.append(DerivativePiece(M + 1, _h(hat, 1), "T"))
    # F_{M+2} = h (2W(P - B_M/4) - z^M T'/2)
    zM = HSeries.constant(b.zpow[M], b.nh)
    hat = 2.0 * (b.W * (b.P - 0.25 * b.B[M])) - 0.5 * (zM * b.d1)
    out.append(DerivativePiece(M + 2, _h(hat, 1), "T'"))
    iW2 = b.invW * b.invW
    iW3 = iW2 * b.invW
    out.append(DerivativePiece(M + 3, 0.5 * _h(b.d3 * iW2, 3) - 1.5 * _h(b.d2 * b.d2 * iW3, 4), "T'"))
    out.append(DerivativePiece(M + 4, 1.5 * _h(b.d2 * iW2, 3), "T''"))
    out.append(DerivativePiece(M + 5, -0.5 * _h(b.invW, 2), "T'''"))
    return out


def _component(v: TangentVector, label: str, n: int) -> HSeries:
    if label.startswith("E"):
        return v.dE[int(label[1:])].lift(n)
    k = label.count("'")
    if k == 0:
        return v.dT.truncate(z_order=n)
    d = differentiate(v.dT, k)
    return d.truncate(z_order=n)


def apply_L1(v: TangentVector, M: int, n: int) -> HSeries:
    """``sum_j z^j dE_j - (z^M/2) dT' - (M/4) z^(M-1) dT`` at z-order ``n``."""
    T = v.dT.truncate(z_order=n)
    dT = differentiate(v.dT, 1).truncate(z_order=n)
    out = -0.5 * dT.z_shift(M) - (M / 4.0) * T.z_shift(M - 1)
    for j, e in enumerate(v.dE):
        out = out + e.lift(n).z_shift(j)
    return out


def apply_pieces(pieces, v: TangentVector, nus=None) -> HSeries:
    """``sum F_nu L_nu(v)`` over the given pieces (optionally restricted to ``nus``)."""
    out = None
    for p in pieces:
        if nus is not None and p.nu not in nus:
            continue
        term = p.F * _component(v, p.label, p.F.z_order)
        out = term if out is None else out + term
    return out


def eval_dF(x: StatePoint, v: TangentVector, pieces=None) -> HSeries:
    """Frechet derivative ``dF(x) v = L1(v) + sum_{nu>=2} F_nu(x) L_nu(v)``."""
    if v.nh != x.nh or v.dT.z_order != x.nz:
        raise ValueError("tangent vector orders must match the state")
    if pieces is None:
        pieces = derivative_pieces(x)
    n = x.nz - 3
    return apply_L1(v, x.M, n) + apply_pieces(pieces, v)


# --------------------------------------------------------------------------
# residuals
# --------------------------------------------------------------------------

def residual_profile(F: HSeries) -> np.ndarray:
    """Max absolute coefficient of each h-order."""
    return np.max(np.abs(F.coeffs), axis=1)


def residual_order(F: HSeries, tol) -> int:
    """Smallest n whose h^n coefficient exceeds ``tol`` in max norm; ``h_order + 1`` if none.

    ``tol`` is a positive number or a per-h-order array of them.
    """
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (F.h_order + 1,))
    if np.any(tol <= 0):
        raise ValueError("tol must be positive")
    bad = np.flatnonzero(residual_profile(F) > tol)
    return int(bad[0]) if bad.size else F.h_order + 1


def residual_scale(x: StatePoint, q1_tilde: HSeries, z_order: int | None = None) -> np.ndarray:
    """Per-h-order magnitude scale for residual tolerances.

    Entry n is the largest coefficient of T, the E_j or Q1~ at h-orders ``<= n``
    (z-orders ``<= z_order``), floored at 1. Row n of F is built from exactly
    those coefficients, so round-off there is proportional to this scale.
    """
    zo = x.nz if z_order is None else min(z_order, x.nz)
    mags = np.max(np.abs(x.T.coeffs[:, : zo + 1]), axis=1)
    for e in x.E:
        mags = np.maximum(mags, np.abs(e.coeffs[:, 0]))
    zq = min(zo, q1_tilde.z_order)
    mq = np.max(np.abs(q1_tilde.coeffs[: x.nh + 1, : zq + 1]), axis=1)
    mags[: mq.shape[0]] = np.maximum(mags[: mq.shape[0]], mq)
    return np.maximum.accumulate(np.maximum(mags, 1.0))


@dataclass(frozen=True)
class CanonicalReport:
    """Residuals of the canonical-form equation rebuilt from y(x, h).

    ``per_order[n]`` is the max residual coefficient attached to ``h^n`` of F
    (the ``h^(n+1)`` coefficient of the x-form equation). ``h0`` is the
    ``h^0`` coefficient, which only tests the change of variable.
    ``braces`` holds the same profile for the bracket form with psi.
    """

    per_order: tuple
    h0: float
    braces: tuple
    z_order: int

    @property
    def max_residual(self) -> float:
        return max(self.per_order + (self.h0,))


def _hx(a: HSeries, k: int, h_order: int) -> HSeries:
    return h_shift(a, k, h_order)


def x_route_residual(spec, y: HSeries, E, n: int) -> HSeries:
    """``y'^2 (sum h E_j y^j - y^M/4) - (h^2/2){y, x} - Q - h Q1`` at z-order ``n``.

    ``y`` is a series in x of h-order ``N + 1``; ``E`` are scalar series of h-order ``N``.
    """
    M = spec.M
    N1 = y.h_order
    yt = y.truncate(z_order=n)
    y1 = differentiate(y, 1).truncate(z_order=n)
    y2 = differentiate(y, 2).truncate(z_order=n)
    y3 = differentiate(y, 3).truncate(z_order=n)
    inv1 = reciprocal(y1)
    schw = y3 * inv1 - 1.5 * (y2 * inv1) * (y2 * inv1)
    ypow = [HSeries.one(N1, n)]
    for _ in range(M):
        ypow.append(ypow[-1] * yt)
    bracket = -0.25 * ypow[M]
    for j, e in enumerate(E):
        bracket = bracket + _hx(e.lift(n), 1, N1) * ypow[j]
    q = HSeries.constant(spec.q.truncate(n), N1)
    q1 = spec.q1.truncate(z_order=n)
    q1 = q1.extend(h_order=N1 - 1) if q1.h_order < N1 - 1 else q1.truncate(h_order=N1 - 1)
    res = y1 * y1 * bracket - 0.5 * _hx(schw, 2, N1) - q - _hx(q1, 1, N1)
    return res


def braces_residual(spec, y: HSeries, psi: HSeries, E, n: int) -> HSeries:
    """Bracket of the reduced equation minus ``sum h E_j y^j - y^M/4``.

    The bracket is ``x_y^2 (Q + h Q1) + h^2 x_yy/x_y psi_y/psi - h^2 psi_yy/psi``,
    with y-derivatives taken through ``d/dy = x_y d/dx``.
    """
    M = spec.M
    N1 = y.h_order
    yx = differentiate(y, 1).truncate(z_order=n + 2)
    xy = reciprocal(yx)

    def d_y(f):
        m = f.z_order - 1
        return differentiate(f, 1) * xy.truncate(z_order=m)

    xyy = d_y(xy)
    p = psi.truncate(z_order=n + 2)
    py = d_y(p)
    pyy = d_y(py)
    ipsi = reciprocal(p.truncate(z_order=n))
    ixy = reciprocal(xy.truncate(z_order=n))
    xy_n = xy.truncate(z_order=n)
    q = HSeries.constant(spec.q.truncate(n), N1)
    q1 = spec.q1.truncate(z_order=n)
    q1 = q1.extend(h_order=N1 - 1) if q1.h_order < N1 - 1 else q1.truncate(h_order=N1 - 1)
    lhs = xy_n * xy_n * (q + _hx(q1, 1, N1))
    lhs = lhs + _hx(xyy.truncate(z_order=n) * ixy * py.truncate(z_order=n) * ipsi, 2, N1)
    lhs = lhs - _hx(pyy * ipsi, 2, N1)
    yt = y.truncate(z_order=n)
    ypow = [HSeries.one(N1, n)]
    for _ in range(M):
        ypow.append(ypow[-1] * yt)
    rhs = -0.25 * ypow[M]
    for j, e in enumerate(E):
        rhs = rhs + _hx(e.lift(n), 1, N1) * ypow[j]
    return lhs - rhs


def verify_canonical_form(spec, td, solution: StatePoint, psi: HSeries | None = None,
                          y: HSeries | None = None) -> CanonicalReport:
    """Rebuild the x-form equation from ``y = z(x) + h T(z(x), h)`` and report residuals.

    This route never calls :func:`eval_F`; it works with x-derivatives of y.
    """
    from .liouville import assemble_y_of_x, psi_from_y

    if y is None:
        y = assemble_y_of_x(td, solution.T)
    if psi is None:
        psi = psi_from_y(y)
    n = min(y.z_order - 3, spec.nz, psi.z_order - 2)
    if n < 0:
        raise ValueError("series too short to verify")
    res = x_route_residual(spec, y, solution.E, n)
    prof = residual_profile(res)
    br = residual_profile(braces_residual(spec, y, psi, solution.E, n))
    return CanonicalReport(
        per_order=tuple(float(v) for v in prof[1:]),
        h0=float(prof[0]),
        braces=tuple(float(v) for v in br),
        z_order=n,
    )


def f_in_x_variables(F: HSeries, td) -> HSeries:
    """``h (dz/dx)^2 F(z(x), h)``, which equals the x-form residual."""
    n = min(F.z_order, td.z_of_x.order)
    zx = td.z_of_x.truncate(n)
    dz = differentiate(td.z_of_x, 1).truncate(n)
    Fx = compose(F.truncate(z_order=n), zx)
    G = HSeries.constant(dz * dz, F.h_order) * Fx
    return h_shift(G, 1, F.h_order + 1)


def two_route_difference(spec, td, solution: StatePoint) -> np.ndarray:
    """Per-h-order max gap between the x-form residual and the transported F.

    Entry ``n + 1`` belongs to ``h^n`` of F; entry 0 compares the h^0 rows.
    """
    from .liouville import assemble_y_of_x

    F = eval_F(solution, td.q1_tilde)
    G = f_in_x_variables(F, td)
    y = assemble_y_of_x(td, solution.T)
    n = min(G.z_order, y.z_order - 3)
    R = x_route_residual(spec, y, solution.E, n)
    return residual_profile(R - G.truncate(z_order=n))
