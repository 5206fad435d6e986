"""Weighted norms on truncated Gevrey series, the beta functions, Gevrey fits
and exhaustive checkers for two factorial-sum inequalities."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .series import HSeries, ZSeries, differentiate

EXACT_FACTORIAL_CAP = 18


@dataclass(frozen=True)
class NormParams:
    """``t`` weights powers of h, ``rho`` is the z-disc radius, ``s`` the scale parameter."""

    t: float
    rho: float
    s: float = 1.0

    def __post_init__(self):
        if not (self.t > 0 and self.rho > 0 and 0 < self.s <= 1):
            raise ValueError("need t > 0, rho > 0 and 0 < s <= 1")

    @classmethod
    def from_disc(cls, t: float, rho0: float, s: float) -> "NormParams":
        """Radius ``rho0 (1 + s) / 2``, the disc attached to scale ``s``."""
        return cls(t=t, rho=rho0 * (1.0 + s) / 2.0, s=s)


@dataclass(frozen=True)
class GevreyFit:
    C0: float
    tau: float
    max_order_used: int
    residual: float

    def bound(self, n: int) -> float:
        return self.C0 * self.tau ** n * math.factorial(n)


def _h_weights(count: int, t: float) -> np.ndarray:
    return np.array([t ** k / math.factorial(k) for k in range(count)])


def n0_norm(p, t: float) -> float:
    """``sum_k |p_k| t^k / k!`` for a scalar h-series (HSeries of z-order 0 or a sequence)."""
    if isinstance(p, HSeries):
        vals = p.scalars()
    else:
        vals = np.asarray(p, dtype=np.complex128).ravel()
    return float(np.sum(np.abs(vals) * _h_weights(vals.shape[0], t)))


def rho_norm(g, rho: float) -> float:
    """``sum_j |a_j| rho^j`` over stored coefficients of a ZSeries."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    c = g.coeffs if isinstance(g, ZSeries) else np.asarray(g)
    return float(np.sum(np.abs(c) * rho ** np.arange(c.shape[0])))


def vt_rho_norm(P: HSeries, t: float, rho: float) -> float:
    """Norm of an (h, z) series: ``sum_{n,j} |P_{n,j}| t^n / n! rho^j``."""
    c = np.abs(P.coeffs)
    w = _h_weights(c.shape[0], t)[:, None] * (rho ** np.arange(c.shape[1]))[None, :]
    return float(np.sum(c * w))


def xs_norm(x, params: NormParams) -> float:
    """Sum of the E-norms plus the norms of T, T', T'', T''' at radius ``params.rho``."""
    total = sum(n0_norm(E, params.t) for E in x.E)
    T = x.T
    total += vt_rho_norm(T, params.t, params.rho)
    for k in (1, 2, 3):
        total += vt_rho_norm(differentiate(T, k), params.t, params.rho)
    return total


def derivative_norm_bound_check(g: ZSeries, rho: float, eps: float, k: int) -> bool:
    """``|g^(k)|_(rho - eps) <= k!/eps^k |g|_rho`` (up to 1e-12)."""
    if not 0 < eps < rho:
        raise ValueError("need 0 < eps < rho")
    lhs = rho_norm(differentiate(g, k), rho - eps)
    rhs = math.factorial(k) / eps ** k * rho_norm(g, rho)
    return lhs <= rhs + 1e-12


def _compositions(j: int, k: int):
    """All (j_1, ..., j_k) with j_i >= 1 summing to j."""
    for cuts in itertools.combinations(range(1, j), k - 1):
        bounds = (0,) + cuts + (j,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(k))


def composition_sums(j: int, k: int):
    """Sum of ``j_1! ... j_k!`` over compositions of j into k positive parts,
    returned both as an exact integer and as a float accumulated independently."""
    fact = [math.factorial(i) for i in range(j + 1)]
    ffact = [math.gamma(i + 1.0) for i in range(j + 1)]
    total = 0
    total_f = 0.0
    for parts in _compositions(j, k):
        prod = 1
        prod_f = 1.0
        for p in parts:
            prod *= fact[p]
            prod_f *= ffact[p]
        total += prod
        total_f += prod_f
    return total, total_f


def composition_sum(j: int, k: int) -> int:
    return composition_sums(j, k)[0]


def check_composition_inequality(j: int, k: int, cap: int = EXACT_FACTORIAL_CAP) -> bool:
    """Exhaustively check ``sum j_1!...j_k! <= 4^(k-1) (j-k+1)!``.

    Evaluated twice, in exact integers and in floating point; both must agree.
    """
    if not 1 <= k <= j:
        raise ValueError("need 1 <= k <= j")
    if j > cap:
        raise ValueError(f"j={j} exceeds the exact-arithmetic cap {cap}")
    lhs, lhs_f = composition_sums(j, k)
    rhs = 4 ** (k - 1) * math.factorial(j - k + 1)
    rhs_f = 4.0 ** (k - 1) * math.gamma(j - k + 2.0)
    if abs(lhs_f - lhs) > 1e-9 * max(lhs, 1):
        raise ArithmeticError(f"float and exact sums disagree at j={j}, k={k}")
    return lhs <= rhs and lhs_f <= rhs_f * (1 + 1e-12)


def pair_sum(j: int) -> int:
    return sum(math.factorial(a) * math.factorial(j - a) for a in range(j + 1))


def check_pair_inequality(j: int) -> bool:
    """``sum_{j1 + j2 = j} j1! j2! <= 6 j!`` for j >= 0."""
    if j < 0:
        raise ValueError("need j >= 0")
    return pair_sum(j) <= 6 * math.factorial(j)


def beta(tv: float) -> float:
    return tv * math.exp(4.0 * tv)


def _series_sum(term, start: int) -> float:
    total = 0.0
    k = start
    while True:
        a = term(k)
        total += a
        if k > 4 and a <= 1e-17 * total:
            return total
        k += 1


def beta1(tv: float) -> float:
    """``sum_{k>=0} (k+1) 4^k t^(k+1) / k!``."""
    if tv < 0:
        raise ValueError("t must be >= 0")
    if tv == 0:
        return 0.0
    return _series_sum(lambda k: (k + 1) * 4.0 ** k * tv ** (k + 1) / math.factorial(k), 0)


def beta2(tv: float) -> float:
    """``sum_{k>=1} t^(k+1) 4^k / k!``."""
    if tv < 0:
        raise ValueError("t must be >= 0")
    if tv == 0:
        return 0.0
    return _series_sum(lambda k: tv ** (k + 1) * 4.0 ** k / math.factorial(k), 1)


def fit_gevrey(norm_samples) -> GevreyFit:
    """Fit ``sample_n <= C0 tau^n n!``.

    Least squares on ``log(sample_n / n!) = log C0 + n log tau`` over the
    nonzero samples, then C0 is raised until the bound dominates every sample.
    ``residual`` is the largest absolute log-domain deviation of the fit line.
    """
    s = np.asarray(norm_samples, dtype=float)
    if s.shape[0] < 3:
        raise ValueError("need at least 3 samples")
    if np.any(s < 0):
        raise ValueError("samples must be non-negative")
    n = np.arange(s.shape[0])
    mask = s > 0
    if not mask.any():
        return GevreyFit(C0=0.0, tau=1.0, max_order_used=int(n[-1]), residual=0.0)
    logfact = np.array([math.lgamma(k + 1.0) for k in n])
    y = np.log(s[mask]) - logfact[mask]
    x = n[mask].astype(float)
    if x.shape[0] == 1:
        slope, icpt = 0.0, float(y[0])
    else:
        slope, icpt = np.polyfit(x, y, 1)
    resid = y - (icpt + slope * x)
    lift = max(0.0, float(np.max(resid)))
    return GevreyFit(
        C0=float(math.exp(icpt + lift)),
        tau=float(math.exp(slope)),
        max_order_used=int(n[-1]),
        residual=float(np.max(np.abs(resid))),
    )
