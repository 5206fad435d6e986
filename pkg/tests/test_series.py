from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gevrey_nf.series import (
    HSeries,
    SeriesError,
    SeriesErrorKind,
    ZSeries,
    add,
    compose,
    differentiate,
    exp_series,
    h_shift,
    h_unshift,
    integrate,
    mul,
    reciprocal,
    revert,
    unit_power,
)

from conftest import rand_h, rand_z

coef = st.floats(-1, 1, allow_nan=False, allow_infinity=False)


def zs(order):
    return st.lists(coef, min_size=order + 1, max_size=order + 1).map(ZSeries)


def unit_zs(order):
    return st.lists(coef, min_size=order, max_size=order).map(lambda c: ZSeries([1.0] + c))


def z(c, order=None):
    return ZSeries.from_poly(c, len(c) - 1 if order is None else order)


def close(a, b, tol=1e-12):
    return np.allclose(a.coeffs, b.coeffs, atol=tol, rtol=0)


def poly_mul(a, b, n):
    # independent oracle for truncated products
    return np.polynomial.polynomial.polymul(a, b)[: n + 1]


# --------------------------------------------------------------------------
# examples
# --------------------------------------------------------------------------

class TestBasics:
    def test_add_examples(self):
        assert close(z([1, 1]) + z([1, -1]), z([2, 0]))
        f = z([0.3, -2, 5])
        assert close(ZSeries.zero(2) + f, f)
        assert close(add(z([0, 1, 1]), z([0, 0, 1])), z([0, 1, 2]))

    def test_mul_examples(self):
        assert close(z([1, 1], 2) * z([1, -1], 2), z([1, 0, -1]))
        f = z([0.2, 3, -1])
        assert close(mul(f, ZSeries.one(2)), f)
        a = HSeries.scalar([1, 1])
        assert np.allclose((a * a).scalars(), [1, 2])

    def test_mismatched_orders_raise(self):
        with pytest.raises(SeriesError) as exc:
            z([1, 2]) + z([1, 2, 3])
        assert exc.value.kind is SeriesErrorKind.TRUNCATION_MISMATCH
        with pytest.raises(SeriesError):
            HSeries.zero(2, 3) * HSeries.zero(3, 3)

    def test_truncate_never_pads(self):
        with pytest.raises(SeriesError) as exc:
            z([1, 2]).truncate(5)
        assert exc.value.kind is SeriesErrorKind.TRUNCATION_MISMATCH
        assert z([1, 2]).extend(4).order == 4

    def test_immutable(self):
        f = z([1, 2, 3])
        with pytest.raises(ValueError):
            f.coeffs[0] = 5

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ZSeries([1.0, np.nan])


class TestCalculus:
    def test_differentiate(self):
        assert close(differentiate(z([0, 0, 1]), 1), z([0, 2]))
        d3 = differentiate(z([0, 0, 1]), 3)
        assert d3.order == 0 and d3.coeffs[0] == 0
        assert close(differentiate(z([1, 1, 1, 1]), 1), z([1, 2, 3]))

    def test_integrate(self):
        assert close(integrate(z([1])), z([0, 1]))
        assert close(integrate(z([0, 1])), z([0, 0, 0.5]))
        assert close(integrate(z([1, 2])), z([0, 1, 1]))

    def test_hseries_derivative_is_rowwise(self, rng):
        a = rand_h(rng, 3, 6)
        d = differentiate(a, 2)
        for n in range(4):
            assert close(d[n], differentiate(a[n], 2))


class TestDivision:
    def test_geometric(self):
        assert close(reciprocal(z([1, -1], 5)), z([1] * 6))
        assert close(reciprocal(z([1])), z([1]))

    def test_one_over_two_plus_z(self):
        r = reciprocal(z([2, 1], 2))
        assert close(r, z([0.5, -0.25, 0.125]))
        assert np.allclose(poly_mul([2, 1], r.coeffs, 2), [1, 0, 0])

    def test_non_unit(self):
        with pytest.raises(SeriesError) as exc:
            reciprocal(z([0, 1]))
        assert exc.value.kind is SeriesErrorKind.DIVISION_BY_NON_UNIT

    def test_hseries_reciprocal(self, rng):
        a = rand_h(rng, 4, 5, 0.4) + 1.0
        assert (a * reciprocal(a)).allclose(HSeries.one(4, 5))


class TestComposition:
    def test_examples(self):
        assert close(compose(z([0, 1, 1]), z([0, 2, 0])), z([0, 2, 4]))
        f = z([0.5, 1, -2, 3])
        assert close(compose(f, ZSeries.variable(3)), f)

    def test_geometric_of_square(self):
        g = compose(z([1] * 5), z([0, 0, 1, 0, 0]))
        # oracle: sum_k (z^2)^k expanded directly
        expect = np.zeros(5)
        for k in range(3):
            expect[2 * k] += 1
        assert np.allclose(g.coeffs, expect)

    def test_constant_term_rejected(self):
        with pytest.raises(SeriesError) as exc:
            compose(z([1, 1]), z([1, 1]))
        assert exc.value.kind is SeriesErrorKind.COMPOSITION_CONSTANT_TERM

    def test_hseries_outer(self, rng):
        a = rand_h(rng, 2, 5)
        inner = z([0, 1.5, -0.5, 0.1, 0, 0.2])
        c = compose(a, inner)
        for n in range(3):
            assert close(c[n], compose(a[n], inner))


def _fixed_point_revert(f, n):
    """Oracle: g <- g - (f o g - z), starting at z / f'(0), via numpy Horner."""
    c = np.asarray(f, dtype=complex)
    g = np.zeros(n + 1, dtype=complex)
    g[1] = 1 / c[1]
    for _ in range(n + 2):
        acc = np.zeros(n + 1, dtype=complex)
        for ck in c[::-1]:
            acc = poly_mul(acc, g, n)
            acc = np.pad(acc, (0, n + 1 - len(acc)))
            acc[0] += ck
        acc[1] -= 1
        g = g - acc / c[1]
    return g


class TestReversion:
    def test_examples(self):
        assert close(revert(ZSeries.variable(4)), ZSeries.variable(4))
        assert close(revert(z([0, 2], 4)), z([0, 0.5], 4))
        r = revert(z([0, 1, 1], 4))
        assert close(r, z([0, 1, -1, 2, -5]))
        assert np.allclose(r.coeffs, _fixed_point_revert([0, 1, 1, 0, 0], 4), atol=1e-12)

    def test_fixed_point_oracle_random(self, rng):
        f = rand_z(rng, 7).coeffs.copy()
        f[0], f[1] = 0, 1.3 - 0.2j
        assert np.allclose(revert(ZSeries(f)).coeffs, _fixed_point_revert(f, 7), atol=1e-10)

    @pytest.mark.parametrize("c", [[1, 1, 0], [0, 0, 1], [0]])
    def test_invalid(self, c):
        with pytest.raises(SeriesError) as exc:
            revert(ZSeries(c))
        assert exc.value.kind is SeriesErrorKind.REVERSION_INVALID_LINEAR_TERM


class TestPowersAndExp:
    def test_sqrt(self):
        r = unit_power(z([1, 1], 2), Fraction(1, 2))
        assert close(r, z([1, 0.5, -0.125]))
        assert close(r * r, z([1, 1], 2))

    def test_identity_and_inverse(self):
        a = z([2, -1, 0.5])
        assert close(unit_power(a, 1), a)
        assert close(unit_power(z([1, 1], 4), -1), reciprocal(z([1, 1], 4)))

    def test_non_unit(self):
        with pytest.raises(SeriesError) as exc:
            unit_power(z([0, 1]), Fraction(1, 3))
        assert exc.value.kind is SeriesErrorKind.NON_UNIT_FRACTIONAL_POWER

    def test_principal_branch(self):
        r = unit_power(z([-4, 0]), Fraction(1, 2))
        assert np.isclose(r.coeffs[0], 2j)

    def test_exp_examples(self):
        assert close(exp_series(ZSeries.zero(3)), ZSeries.one(3))
        assert close(exp_series(ZSeries.variable(3)), z([1, 1, 0.5, 1 / 6]))
        e = exp_series(z([0, 1, 1]))
        assert close(e, z([1, 1, 1.5]))
        # d/dz e = (1 + 2z) e up to order 1
        lhs = differentiate(e, 1)
        rhs = (z([1, 2], 2) * e).truncate(1)
        assert close(lhs, rhs)

    def test_exp_constant_term(self):
        assert np.isclose(exp_series(z([2.0, 0]))[0], np.exp(2.0))


class TestHShift:
    def test_examples(self):
        one = HSeries.one(1, 0)
        assert np.allclose(h_shift(one, 1).scalars(), [0, 1])
        f = HSeries.scalar([1, 2, 3])
        assert h_shift(f, 0).allclose(f)
        assert np.allclose(h_shift(HSeries.scalar([1, 1, 0, 0]), 2).scalars(), [0, 0, 1, 1])

    def test_unshift_inverts(self, rng):
        a = rand_h(rng, 5, 3)
        b = h_shift(a, 2, 7)
        assert h_unshift(b, 2).allclose(a)


# --------------------------------------------------------------------------
# properties
# --------------------------------------------------------------------------

PROP = settings(max_examples=60, deadline=None)


@PROP
@given(zs(6), zs(6), zs(6))
def test_ring_axioms(a, b, c):
    tol = 1e-12
    assert close(a + b, b + a, tol)
    assert close(a * b, b * a, tol)
    assert close((a + b) + c, a + (b + c), tol)
    assert close((a * b) * c, a * (b * c), 1e-11)
    assert close(a * (b + c), a * b + a * c, 1e-11)


@PROP
@given(unit_zs(8))
def test_reciprocal_property(a):
    assert close(a * reciprocal(a), ZSeries.one(8), 1e-9)


@PROP
@given(st.lists(coef, min_size=6, max_size=6))
def test_reversion_property(tail):
    f = ZSeries([0.0, 1.0] + [0.5 * t for t in tail])
    g = revert(f)
    idz = ZSeries.variable(7)
    assert close(compose(f, g), idz, 1e-10)
    assert close(compose(g, f), idz, 1e-10)


@PROP
@given(unit_zs(6), st.fractions(-3, 3, max_denominator=6), st.fractions(-3, 3, max_denominator=6))
def test_power_laws(a, p, q):
    one = ZSeries.one(6)
    assert close(unit_power(a, p) * unit_power(a, -p), one, 1e-8)
    assert close(unit_power(a, p + q), unit_power(a, p) * unit_power(a, q), 1e-8)


@PROP
@given(zs(6), zs(6))
def test_exp_homomorphism(a, b):
    assert close(exp_series(a + b), exp_series(a) * exp_series(b), 1e-9)


@PROP
@given(zs(7))
def test_differentiate_integrate(a):
    assert close(differentiate(integrate(a), 1), a)


def test_hseries_power_and_exp(rng):
    a = rand_h(rng, 4, 5, 0.3) + 1.0
    p = Fraction(2, 3)
    assert (unit_power(a, p) * unit_power(a, -p)).allclose(HSeries.one(4, 5), atol=1e-10)
    b = rand_h(rng, 4, 5, 0.3)
    assert exp_series(a + b).allclose(exp_series(a) * exp_series(b), atol=1e-9)
