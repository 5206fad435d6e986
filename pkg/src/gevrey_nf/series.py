"""Truncated power series in z (``ZSeries``) and in h over z (``HSeries``).

Truncation is strict. Binary operations demand identical truncation orders
and raise ``SeriesError(TRUNCATION_MISMATCH)`` otherwise; lowering an order
is always explicit (``truncate``) and so is zero-extension (``extend``).
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from numbers import Number

import numpy as np

from . import _kernels


class SeriesErrorKind(enum.Enum):
    DIVISION_BY_NON_UNIT = "DivisionByNonUnit"
    NON_UNIT_FRACTIONAL_POWER = "NonUnitFractionalPower"
    COMPOSITION_CONSTANT_TERM = "CompositionConstantTerm"
    REVERSION_INVALID_LINEAR_TERM = "ReversionInvalidLinearTerm"
    TRUNCATION_MISMATCH = "TruncationMismatch"


class SeriesError(ValueError):
    def __init__(self, kind: SeriesErrorKind, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind.value}: {detail}" if detail else kind.value)


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError("series coefficients must be finite")
    arr.setflags(write=False)
    return arr


def _check_same(a, b):
    if type(a) is not type(b):
        raise TypeError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if a.coeffs.shape != b.coeffs.shape:
        raise SeriesError(
            SeriesErrorKind.TRUNCATION_MISMATCH,
            f"orders {a.orders} and {b.orders} differ",
        )


class ZSeries:
    """Truncated Taylor series ``sum_{k<=order} c_k z^k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = _frozen(coeffs)
        if c.ndim != 1 or c.shape[0] == 0:
            raise ValueError("ZSeries needs a non-empty 1-D coefficient array")
        self.coeffs = c

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, order: int) -> "ZSeries":
        return cls(np.zeros(order + 1))

    @classmethod
    def one(cls, order: int) -> "ZSeries":
        c = np.zeros(order + 1, dtype=np.complex128)
        c[0] = 1.0
        return cls(c)

    @classmethod
    def monomial(cls, k: int, order: int, coef: complex = 1.0) -> "ZSeries":
        c = np.zeros(order + 1, dtype=np.complex128)
        if k <= order:
            c[k] = coef
        return cls(c)

    @classmethod
    def variable(cls, order: int) -> "ZSeries":
        return cls.monomial(1, order)

    @classmethod
    def from_poly(cls, coeffs, order: int) -> "ZSeries":
        """Exact embedding of a polynomial; raises if it does not fit."""
        c = np.asarray(coeffs, dtype=np.complex128)
        if c.shape[0] > order + 1 and np.any(c[order + 1:] != 0):
            raise ValueError(f"polynomial of degree {c.shape[0] - 1} exceeds order {order}")
        out = np.zeros(order + 1, dtype=np.complex128)
        m = min(order + 1, c.shape[0])
        out[:m] = c[:m]
        return cls(out)

    # basics -------------------------------------------------------------
    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def orders(self):
        return (self.order,)

    def __len__(self):
        return self.coeffs.shape[0]

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        return f"ZSeries(order={self.order}, coeffs={np.array2string(self.coeffs, precision=4)})"

    def truncate(self, order: int) -> "ZSeries":
        if order > self.order:
            raise SeriesError(
                SeriesErrorKind.TRUNCATION_MISMATCH,
                f"cannot truncate order {self.order} up to {order}; use extend",
            )
        return ZSeries(self.coeffs[: order + 1])

    def extend(self, order: int) -> "ZSeries":
        """Zero-pad to a higher order. The new coefficients carry no information."""
        if order < self.order:
            return self.truncate(order)
        out = np.zeros(order + 1, dtype=np.complex128)
        out[: self.order + 1] = self.coeffs
        return ZSeries(out)

    def __call__(self, z):
        """Evaluate the truncated polynomial at a number (Horner)."""
        acc = 0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        _check_same(self, other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Number):
            c = self.coeffs.copy()
            c[0] += other
            return ZSeries(c)
        _check_same(self, other)
        return ZSeries(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return ZSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return ZSeries(self.coeffs * other)
        _check_same(self, other)
        return ZSeries(_kernels.conv1d(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return ZSeries(self.coeffs / other)
        return self * reciprocal(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return unit_power(self, k)
        out = ZSeries.one(self.order)
        for _ in range(k):
            out = out * self
        return out

    def z_shift(self, k: int) -> "ZSeries":
        """Multiply by z**k (k >= 0), keeping the order."""
        c = np.zeros_like(self.coeffs)
        if k <= self.order:
            c[k:] = self.coeffs[: self.order + 1 - k]
        return ZSeries(c)


class HSeries:
    """Truncated series ``sum_{n<=h_order} h^n P_n(z)``, each ``P_n`` of one z-order.

    Stored as a ``(h_order + 1, z_order + 1)`` complex array. A z-order of 0
    represents scalar (z-independent) coefficients such as ``E_j(h)``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = _frozen(coeffs)
        if c.ndim != 2 or 0 in c.shape:
            raise ValueError("HSeries needs a non-empty 2-D coefficient array")
        self.coeffs = c

    @classmethod
    def zero(cls, h_order: int, z_order: int) -> "HSeries":
        return cls(np.zeros((h_order + 1, z_order + 1)))

    @classmethod
    def one(cls, h_order: int, z_order: int) -> "HSeries":
        c = np.zeros((h_order + 1, z_order + 1), dtype=np.complex128)
        c[0, 0] = 1.0
        return cls(c)

    @classmethod
    def from_zseries(cls, terms) -> "HSeries":
        terms = list(terms)
        if not terms:
            raise ValueError("need at least one coefficient")
        nz = terms[0].order
        for t in terms:
            if t.order != nz:
                raise SeriesError(
                    SeriesErrorKind.TRUNCATION_MISMATCH,
                    "all ZSeries coefficients must share one z-order",
                )
        return cls(np.stack([t.coeffs for t in terms]))

    @classmethod
    def constant(cls, p: ZSeries, h_order: int) -> "HSeries":
        """The h-independent series whose h^0 coefficient is ``p``."""
        c = np.zeros((h_order + 1, p.order + 1), dtype=np.complex128)
        c[0] = p.coeffs
        return cls(c)

    @classmethod
    def scalar(cls, values, h_order: int | None = None) -> "HSeries":
        """A scalar series ``sum v_n h^n`` (z-order 0)."""
        v = np.asarray(values, dtype=np.complex128).ravel()
        if h_order is None:
            h_order = v.shape[0] - 1
        c = np.zeros((h_order + 1, 1), dtype=np.complex128)
        m = min(h_order + 1, v.shape[0])
        c[:m, 0] = v[:m]
        return cls(c)

    @property
    def h_order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def z_order(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def orders(self):
        return (self.h_order, self.z_order)

    def __len__(self):
        return self.coeffs.shape[0]

    def __getitem__(self, n) -> ZSeries:
        return ZSeries(self.coeffs[n])

    def __iter__(self):
        for n in range(self.h_order + 1):
            yield self[n]

    def __repr__(self):
        return f"HSeries(h_order={self.h_order}, z_order={self.z_order})"

    @property
    def is_scalar(self) -> bool:
        return self.z_order == 0

    def scalars(self) -> np.ndarray:
        if not self.is_scalar:
            raise ValueError("series has z-dependent coefficients")
        return self.coeffs[:, 0].copy()

    def lift(self, z_order: int) -> "HSeries":
        """Embed a scalar series as z-constant coefficients of the given z-order (exact)."""
        if not self.is_scalar:
            raise ValueError("only scalar series can be lifted")
        c = np.zeros((self.h_order + 1, z_order + 1), dtype=np.complex128)
        c[:, 0] = self.coeffs[:, 0]
        return HSeries(c)

    def truncate(self, h_order: int | None = None, z_order: int | None = None) -> "HSeries":
        h_order = self.h_order if h_order is None else h_order
        z_order = self.z_order if z_order is None else z_order
        if h_order > self.h_order or z_order > self.z_order:
            raise SeriesError(
                SeriesErrorKind.TRUNCATION_MISMATCH,
                f"cannot truncate {self.orders} up to {(h_order, z_order)}; use extend",
            )
        return HSeries(self.coeffs[: h_order + 1, : z_order + 1])

    def extend(self, h_order: int | None = None, z_order: int | None = None) -> "HSeries":
        """Zero-pad to higher orders. Padded entries carry no information."""
        h_order = self.h_order if h_order is None else h_order
        z_order = self.z_order if z_order is None else z_order
        c = np.zeros((h_order + 1, z_order + 1), dtype=np.complex128)
        hh = min(h_order, self.h_order) + 1
        zz = min(z_order, self.z_order) + 1
        c[:hh, :zz] = self.coeffs[:hh, :zz]
        return HSeries(c)

    def map_z(self, fn) -> "HSeries":
        """Apply a ZSeries -> ZSeries map to every h-coefficient."""
        return HSeries.from_zseries(fn(p) for p in self)

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        _check_same(self, other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def valuation(self) -> int:
        """Lowest h-order with a nonzero coefficient (h_order + 1 if zero)."""
        nz_rows = np.flatnonzero(np.any(self.coeffs != 0, axis=1))
        return int(nz_rows[0]) if nz_rows.size else self.h_order + 1

    def __add__(self, other):
        if isinstance(other, Number):
            c = self.coeffs.copy()
            c[0, 0] += other
            return HSeries(c)
        _check_same(self, other)
        return HSeries(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return HSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return HSeries(self.coeffs * other)
        _check_same(self, other)
        return HSeries(_kernels.conv2d(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return HSeries(self.coeffs / other)
        return self * reciprocal(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return unit_power(self, k)
        out = HSeries.one(self.h_order, self.z_order)
        for _ in range(k):
            out = out * self
        return out

    def z_shift(self, k: int) -> "HSeries":
        """Multiply by z**k (k >= 0), keeping both orders."""
        c = np.zeros_like(self.coeffs)
        if k <= self.z_order:
            c[:, k:] = self.coeffs[:, : self.z_order + 1 - k]
        return HSeries(c)


# --------------------------------------------------------------------------
# module-level operations
# --------------------------------------------------------------------------

def add(a, b):
    _check_same(a, b)
    return a + b


def mul(a, b):
    _check_same(a, b)
    return a * b


def differentiate(a, k: int = 1):
    """k-fold z-derivative. The output order drops by k (floored at 0).

    HSeries are differentiated coefficientwise in z.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(a, HSeries):
        c = a.coeffs
        n = c.shape[1]
        if k >= n:
            return HSeries(np.zeros((c.shape[0], 1)))
        idx = np.arange(k, n)
        fac = np.ones(n - k)
        for i in range(k):
            fac = fac * (idx - i)
        return HSeries(c[:, k:] * fac)
    c = a.coeffs
    n = c.shape[0]
    if k >= n:
        return ZSeries.zero(0)
    idx = np.arange(k, n)
    fac = np.ones(n - k)
    for i in range(k):
        fac = fac * (idx - i)
    return ZSeries(c[k:] * fac)


def integrate(a):
    """Antiderivative with zero constant term; the order grows by one."""
    if isinstance(a, HSeries):
        c = a.coeffs
        out = np.zeros((c.shape[0], c.shape[1] + 1), dtype=np.complex128)
        out[:, 1:] = c / np.arange(1, c.shape[1] + 1)
        return HSeries(out)
    c = a.coeffs
    out = np.zeros(c.shape[0] + 1, dtype=np.complex128)
    out[1:] = c / np.arange(1, c.shape[0] + 1)
    return ZSeries(out)


def reciprocal(a):
    if a.coeffs.flat[0] == 0:
        raise SeriesError(SeriesErrorKind.DIVISION_BY_NON_UNIT, "constant term is zero")
    if isinstance(a, HSeries):
        return HSeries(_kernels.recip2d(np.ascontiguousarray(a.coeffs)))
    return ZSeries(_kernels.recip1d(np.ascontiguousarray(a.coeffs)))


def _powers(inner: ZSeries, count: int) -> np.ndarray:
    """Rows 0..count of inner**k, each truncated at inner.order."""
    n = inner.order + 1
    out = np.zeros((count + 1, n), dtype=np.complex128)
    out[0, 0] = 1.0
    for k in range(1, count + 1):
        out[k] = _kernels.conv1d(out[k - 1], inner.coeffs)
    return out


def compose(outer, inner: ZSeries):
    """``outer(inner(z))`` with ``inner(0) == 0``.

    ``outer`` may be an HSeries, in which case every h-coefficient is composed.
    The result has order ``min(outer z-order, inner.order)``.
    """
    if inner.coeffs[0] != 0:
        raise SeriesError(SeriesErrorKind.COMPOSITION_CONSTANT_TERM, "inner series has nonzero constant term")
    if isinstance(outer, HSeries):
        n = min(outer.z_order, inner.order)
        pw = _powers(inner.truncate(n), n)
        return HSeries(outer.coeffs[:, : n + 1] @ pw)
    n = min(outer.order, inner.order)
    pw = _powers(inner.truncate(n), n)
    return ZSeries(outer.coeffs[: n + 1] @ pw)


def revert(f: ZSeries) -> ZSeries:
    """Compositional inverse by Lagrange inversion: ``g_n = [w^(n-1)] (w/f(w))^n / n``."""
    c = f.coeffs
    if c[0] != 0:
        raise SeriesError(SeriesErrorKind.REVERSION_INVALID_LINEAR_TERM, "f(0) must vanish")
    if f.order < 1 or c[1] == 0:
        raise SeriesError(SeriesErrorKind.REVERSION_INVALID_LINEAR_TERM, "f'(0) must be nonzero")
    n = f.order
    phi = _kernels.recip1d(np.ascontiguousarray(c[1:]))  # w / f(w), order n - 1
    out = np.zeros(n + 1, dtype=np.complex128)
    power = phi.copy()
    for k in range(1, n + 1):
        out[k] = power[k - 1] / k
        if k < n:
            power = _kernels.conv1d(power, phi)
    return ZSeries(out)


def _zseries_unit_power(c: np.ndarray, p) -> np.ndarray:
    # J.C.P. Miller recurrence for a^p, a[0] != 0.
    n = c.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    out[0] = complex(c[0]) ** p if p != int(p) else complex(c[0]) ** int(p)
    pf = float(p)
    inv0 = 1.0 / c[0]
    for m in range(1, n):
        k = np.arange(1, m + 1)
        out[m] = inv0 / m * np.dot(((pf + 1.0) * k - m) * c[1: m + 1], out[m - 1::-1][:m])
    return out


def unit_power(a, p):
    """``a**p`` for a unit series and rational (or real) ``p``; principal branch at the constant term."""
    if isinstance(p, Fraction):
        p_val = p.numerator / p.denominator
    else:
        p_val = p
    if a.coeffs.flat[0] == 0:
        raise SeriesError(SeriesErrorKind.NON_UNIT_FRACTIONAL_POWER, "constant term is zero")
    if isinstance(a, ZSeries):
        return ZSeries(_zseries_unit_power(a.coeffs, p_val))
    rows = list(a)
    a0 = rows[0]
    inv0 = reciprocal(a0)
    out = [unit_power(a0, p)]
    for m in range(1, a.h_order + 1):
        acc = ZSeries.zero(a.z_order)
        for k in range(1, m + 1):
            w = (p_val + 1.0) * k - m
            if w != 0 and rows[k].coeffs.any():
                acc = acc + w * (rows[k] * out[m - k])
        out.append(inv0 * acc * (1.0 / m))
    return HSeries.from_zseries(out)


def exp_series(a):
    """Exponential to truncation order (scalar exponential of the constant term included)."""
    if isinstance(a, ZSeries):
        c = a.coeffs
        n = c.shape[0]
        out = np.zeros(n, dtype=np.complex128)
        out[0] = np.exp(c[0])
        for m in range(1, n):
            k = np.arange(1, m + 1)
            out[m] = np.dot(k * c[1: m + 1], out[m - 1::-1][:m]) / m
        return ZSeries(out)
    rows = list(a)
    out = [exp_series(rows[0])]
    for m in range(1, a.h_order + 1):
        acc = ZSeries.zero(a.z_order)
        for k in range(1, m + 1):
            if rows[k].coeffs.any():
                acc = acc + k * (rows[k] * out[m - k])
        out.append(acc * (1.0 / m))
    return HSeries.from_zseries(out)


def h_shift(a: HSeries, k: int, h_order: int | None = None) -> HSeries:
    """Multiply by h**k. Coefficients beyond the output h-order are dropped.

    ``h_order`` defaults to ``a.h_order``; passing a larger value keeps every
    shifted coefficient (the result is exact, not padded).
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    h_order = a.h_order if h_order is None else h_order
    c = np.zeros((h_order + 1, a.z_order + 1), dtype=np.complex128)
    src = a.coeffs
    m = min(src.shape[0], h_order + 1 - k)
    if m > 0:
        c[k: k + m] = src[:m]
    return HSeries(c)


def h_unshift(a: HSeries, k: int) -> HSeries:
    """Divide by h**k, discarding the k lowest h-coefficients (order drops by k)."""
    if k > a.h_order:
        raise ValueError("shift exceeds h-order")
    return HSeries(a.coeffs[k:])


def truncate(a, *orders):
    return a.truncate(*orders)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)
