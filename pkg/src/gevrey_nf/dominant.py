"""Exact inverse of the dominant operator ``(z^M/2) d/dz + (M/4) z^(M-1)``.

Solves ``(z^M/2) u' + (M/4) z^(M-1) u = E_0 + E_1 z + ... + E_{M-2} z^(M-2) + v``
for the holomorphic ``u`` and the constants ``E_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import ZSeries, differentiate

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class BoundReport:
    """Ratios lhs/rhs of the three norm bounds; each must be <= 1."""

    radius: float
    e_ratio: float
    u_ratio: float
    du_ratio: float

    def as_tuple(self):
        return (self.e_ratio, self.u_ratio, self.du_ratio)


@dataclass(frozen=True)
class DominantSolution:
    u: ZSeries
    E: tuple
    M: int
    bound_report: BoundReport | None = None


def dominant_coefficients(M: int, count: int) -> np.ndarray:
    """Factors ``2 / (j - M/2 + 1)`` for ``j = M-1, ..., M-2+count``."""
    j = np.arange(M - 1, M - 1 + count, dtype=float)
    denom = j - M / 2.0 + 1.0
    assert np.all(denom >= 0.5), "denominator j - M/2 + 1 must stay >= 1/2"
    return 2.0 / denom


def solve_dominant_coeffs(v: np.ndarray, M: int):
    """Array-level solve; returns (u coefficients, E values).

    ``u`` has length ``len(v) - M + 1`` (at least 1). ``E`` has length M-1;
    entries beyond the order of ``v`` are zero.
    """
    n = v.shape[0]
    E = np.zeros(max(M - 1, 0), dtype=np.complex128)
    m = min(M - 1, n)
    E[:m] = -v[:m]
    count = n - (M - 1)
    if count <= 0:
        return np.zeros(1, dtype=np.complex128), E
    u = dominant_coefficients(M, count) * v[M - 1:]
    return u, E


def apply_dominant(u: ZSeries, M: int) -> ZSeries:
    """``(z^M/2) u' + (M/4) z^(M-1) u`` at order ``u.order + M - 1``."""
    n = u.order
    out = np.zeros(n + M, dtype=np.complex128)
    k = np.arange(n + 1)
    out[M - 1:] = (k / 2.0 + M / 4.0) * u.coeffs
    return ZSeries(out)


def solve_dominant(v: ZSeries, M: int, r: float | None = None) -> DominantSolution:
    """Unique solution ``(u, E)`` of the dominant equation with right-hand side ``v``.

    ``E_j = -v_j`` for ``j <= M-2`` and ``u_{j-M+1} = 2 v_j / (j - M/2 + 1)``.
    When ``r`` is given the three norm-bound ratios at radius ``r`` are attached.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    u, E = solve_dominant_coeffs(v.coeffs, M)
    sol = DominantSolution(u=ZSeries(u), E=tuple(complex(e) for e in E), M=M)
    if r is not None:
        sol = DominantSolution(sol.u, sol.E, M, bound_ratios(sol, v, r))
    return sol


def _rho(c: np.ndarray, r: float) -> float:
    return float(np.sum(np.abs(c) * r ** np.arange(c.shape[0])))


def bound_ratios(sol: DominantSolution, v: ZSeries, r: float) -> BoundReport:
    M = sol.M
    vn = _rho(v.coeffs, r)
    e_lhs = max((abs(e) * r ** j for j, e in enumerate(sol.E)), default=0.0)
    u_lhs = _rho(sol.u.coeffs, r)
    du_lhs = _rho(differentiate(sol.u, 1).coeffs, r) if sol.u.order >= 1 else 0.0

    def ratio(lhs, rhs):
        if rhs == 0.0:
            return 0.0 if lhs == 0.0 else float("inf")
        return lhs / rhs

    return BoundReport(
        radius=r,
        e_ratio=ratio(e_lhs, vn),
        u_ratio=ratio(u_lhs, 4.0 / r ** (M - 1) * vn),
        du_ratio=ratio(du_lhs, 2.0 / r ** M * vn),
    )


def check_dominant_bounds(sol: DominantSolution, v: ZSeries, r: float) -> bool:
    """True iff ``|E_j| <= |v|_r / r^j``, ``|u|_r <= 4|v|_r / r^(M-1)`` and ``|u'|_r <= 2|v|_r / r^M``."""
    if r <= 0:
        raise ValueError("radius must be positive")
    M = sol.M
    vn = _rho(v.coeffs, r)
    for j, e in enumerate(sol.E):
        if abs(e) > vn / r ** j + BOUND_SLACK:
            return False
    if _rho(sol.u.coeffs, r) > 4.0 / r ** (M - 1) * vn + BOUND_SLACK:
        return False
    du = differentiate(sol.u, 1).coeffs if sol.u.order >= 1 else np.zeros(1)
    if _rho(du, r) > 2.0 / r ** M * vn + BOUND_SLACK:
        return False
    return True


def substitution_residual(sol: DominantSolution, v: ZSeries) -> float:
    """Max coefficient of ``D u - sum E_j z^j - v`` over orders the solution determines."""
    M = sol.M
    lhs = apply_dominant(sol.u, M)
    n = min(lhs.order, v.order)
    c = lhs.coeffs[: n + 1].copy()
    for j, e in enumerate(sol.E):
        if j <= n:
            c[j] -= e
    c -= v.coeffs[: n + 1]
    return float(np.max(np.abs(c)))
