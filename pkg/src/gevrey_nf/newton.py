"""Solvers for F(E, T) = 0: order-by-order recursion and Newton's method of
tangents with the guaranteed-order schedule ``b_{j+1} = 2 b_j - 7``.

Every operator acts on truncated series, so the perturbed inverses are finite
Neumann sums and are exact at truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dominant import solve_dominant_coeffs
from .normal_form import (
    StatePoint,
    TangentVector,
    apply_pieces,
    derivative_pieces,
    eval_F,
    residual_order,
    residual_profile,
    residual_scale,
)
from .series import HSeries, h_shift, h_unshift


class NonConvergenceError(RuntimeError):
    """The Newton residual failed to reach its guaranteed order."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


def b_schedule(b0: int, h_order: int) -> list:
    """``b_0, 2 b_0 - 7, ...`` up to and including the first entry ``>= h_order``."""
    if b0 < 8:
        raise ValueError("b0 must be >= 8")
    out = [b0]
    while out[-1] < h_order:
        out.append(2 * out[-1] - 7)
    return out


def z_budget(M: int, h_order: int) -> int:
    """Extra z-orders carried during the solve.

    Each h-order can consume up to ``M + 2`` z-orders: three through T''' and
    ``M - 1`` through the dominant inverse.
    """
    return (M + 2) * (h_order + 1)


@dataclass(frozen=True)
class NewtonConfig:
    Nh: int
    Nz: int
    b0: int = 8
    max_iters: int = 12
    tol: float = 1e-10
    mode: str = "newton"
    window_z: int | None = None  # z-order on which residual orders are judged

    def __post_init__(self):
        if self.mode not in ("newton", "recursion"):
            raise ValueError("mode must be 'newton' or 'recursion'")
        if self.Nh < 0 or self.Nz < 3:
            raise ValueError("need Nh >= 0 and Nz >= 3")
        if self.b0 < 8:
            raise ValueError("b0 must be >= 8")
        if self.mode == "newton" and self.Nh < self.b0:
            raise ValueError(f"Nh={self.Nh} must be >= b0={self.b0} in newton mode")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    @property
    def schedule(self) -> list:
        return b_schedule(self.b0, self.Nh)


@dataclass
class NewtonStep:
    j: int
    b_j: int
    residual_order: int
    residual_per_order: list
    correction_norm: float


@dataclass
class NewtonTrace:
    steps: list = field(default_factory=list)
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "steps": [
                {
                    "j": s.j,
                    "b_j": s.b_j,
                    "residual_order": s.residual_order,
                    "residual_per_order": s.residual_per_order,
                    "correction_norm": s.correction_norm,
                }
                for s in self.steps
            ],
        }


def _dominant_row(r: np.ndarray, M: int, nz: int):
    # L1(E, u) = r  <=>  solve_dominant with v = -r, then E_j = r_j
    u, E = solve_dominant_coeffs(-r, M)
    T = np.zeros(nz + 1, dtype=np.complex128)
    m = min(nz + 1, u.shape[0])
    T[:m] = u[:m]
    return E, T


# --------------------------------------------------------------------------
# recursion
# --------------------------------------------------------------------------

def solve_recursive(q1_tilde: HSeries, M: int, Nh: int, Nz: int | None = None) -> StatePoint:
    """Order-by-order solution of F = 0 through ``h^Nh``.

    At order n the unknowns ``(E_{j,n}, T_n)`` enter F only through the
    dominant operator, so each order is one call to the dominant solver.
    ``Nz`` defaults to ``q1_tilde.z_order + 3``.
    """
    if Nz is None:
        Nz = q1_tilde.z_order + 3
    if q1_tilde.h_order < Nh or q1_tilde.z_order < Nz - 3:
        raise ValueError("q1_tilde is not known to the requested orders")
    Tc = np.zeros((Nh + 1, Nz + 1), dtype=np.complex128)
    Ec = np.zeros((max(M - 1, 0), Nh + 1), dtype=np.complex128)
    for n in range(Nh + 1):
        x = _state_from_arrays(Ec[:, : n + 1], Tc[: n + 1], M)
        r = eval_F(x, q1_tilde)[n].coeffs
        # F_n = L1(E_n, T_n) + r, so L1(E_n, T_n) = -r
        e, t = _dominant_row(-r, M, Nz)
        Ec[:, n] = e
        Tc[n] = t
    return _state_from_arrays(Ec, Tc, M)


def _state_from_arrays(Ec, Tc, M) -> StatePoint:
    nh = Tc.shape[0] - 1
    E = tuple(HSeries.scalar(Ec[j], nh) for j in range(M - 1))
    return StatePoint(E, HSeries(Tc), M)


def build_initial_guess(q1_tilde: HSeries, M: int, b0: int, Nh: int, Nz: int | None = None) -> StatePoint:
    """Recursion solution through ``h^b0``, as h-polynomials padded to h-order ``Nh``."""
    if b0 > Nh:
        raise ValueError("b0 must not exceed Nh")
    x = solve_recursive(q1_tilde, M, b0, Nz)
    return x.extend(h_order=Nh)


# --------------------------------------------------------------------------
# perturbed inverses
# --------------------------------------------------------------------------

def _G1(r: HSeries, M: int, nz: int, h_order: int) -> TangentVector:
    """Inverse of the dominant block, applied to every h-coefficient."""
    Tc = np.zeros((h_order + 1, nz + 1), dtype=np.complex128)
    Ec = np.zeros((max(M - 1, 0), h_order + 1), dtype=np.complex128)
    for n in range(r.h_order + 1):
        row = r.coeffs[n]
        if not row.any():
            continue
        Ec[:, n], Tc[n] = _dominant_row(row, M, nz)
    return TangentVector(tuple(HSeries.scalar(Ec[j], h_order) for j in range(M - 1)), HSeries(Tc))


def invert_dominant_block(rhs: HSeries, x: StatePoint, pieces=None) -> TangentVector:
    """Solve ``dF(x) v = rhs`` by nested Neumann sums.

    The benign part ``B = sum_{nu=2}^{M+2} F_nu L_nu`` carries a factor h and
    the singular part ``H = sum_{nu=M+3}^{M+5} F_nu L_nu`` carries ``h^2``::

        G = (L1 + B)^(-1)     = sum_k (-1)^k G1 (B G1)^k
        (L1 + B + H)^(-1)     = sum_n (-1)^n G (H G)^n

    Each sum stops when its term vanishes, which happens after at most
    ``Nh + 1`` (benign) or ``ceil(Nh/2) + 1`` (singular) terms.
    """
    M, N, nz = x.M, x.nh, x.nz
    if rhs.h_order != N or rhs.z_order != nz - 3:
        raise ValueError("rhs must have orders (x.nh, x.nz - 3)")
    if pieces is None:
        pieces = derivative_pieces(x)
    benign = set(range(2, M + 3))
    singular = {M + 3, M + 4, M + 5}

    def G(r: HSeries) -> TangentVector:
        t = _G1(r, M, nz, N)
        acc = t
        for k in range(1, N + 2):
            s = apply_pieces(pieces, t, benign)
            if not s.coeffs.any():
                break
            t = _G1(s, M, nz, N)
            acc = acc + t if k % 2 == 0 else acc - t
        return acc

    t = G(rhs)
    acc = t
    for k in range(1, math.ceil(N / 2) + 2):
        s = apply_pieces(pieces, t, singular)
        if not s.coeffs.any():
            break
        t = G(s)
        acc = acc + t if k % 2 == 0 else acc - t
    return acc


# --------------------------------------------------------------------------
# Newton iteration
# --------------------------------------------------------------------------

def _window(F: HSeries, window_z: int | None) -> HSeries:
    if window_z is None or window_z >= F.z_order:
        return F
    return F.truncate(z_order=window_z)


def newton_iterate(q1_tilde: HSeries, M: int, config: NewtonConfig, scale=None):
    """Newton's method from the degree-``b0`` recursion guess.

    Step j evaluates ``y = F(x_j)``, checks that its residual order reaches
    ``min(b_j + 1, Nh + 1)``, and adds ``h^{b_j} w`` where
    ``dF(x_j) w = -y / h^{b_j}`` is solved at h-order ``Nh - b_j``.
    Raises :class:`NonConvergenceError` when the guarantee fails.

    ``scale`` (number or per-h-order array) multiplies ``config.tol``; by
    default it is :func:`residual_scale` of the current iterate.
    """
    Nh, Nz = config.Nh, config.Nz
    x = build_initial_guess(q1_tilde, M, config.b0, Nh, Nz)
    trace = NewtonTrace()
    sched = config.schedule
    for j in range(config.max_iters):
        b = sched[j] if j < len(sched) else sched[-1]
        F = eval_F(x, q1_tilde)
        Fw = _window(F, config.window_z)
        sc = residual_scale(x, q1_tilde, config.window_z) if scale is None else scale
        ro = residual_order(Fw, config.tol * np.asarray(sc, dtype=float))
        step = NewtonStep(j, b, ro, [float(v) for v in residual_profile(Fw)], 0.0)
        trace.steps.append(step)
        need = min(b + 1, Nh + 1)
        if ro < need:
            raise NonConvergenceError(
                f"iterate {j}: residual order {ro} below guaranteed {need}", trace
            )
        if ro >= Nh + 1:
            trace.converged = True
            return x, trace
        shift = min(b, ro)
        rt = h_unshift(F, shift)
        xs = x.truncate(h_order=Nh - shift)
        w = invert_dominant_block(-rt, xs)
        corr = w.h_shift(shift, Nh)
        step.correction_norm = corr.max_abs()
        x = x + corr
    raise NonConvergenceError(f"no convergence within {config.max_iters} iterations", trace)


def solve(q1_tilde: HSeries, M: int, config: NewtonConfig, scale=None):
    """Dispatch on ``config.mode``; returns ``(state, trace or None)``."""
    if config.mode == "recursion":
        return solve_recursive(q1_tilde, M, config.Nh, config.Nz), None
    return newton_iterate(q1_tilde, M, config, scale)
