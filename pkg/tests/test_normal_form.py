from math import comb

import numpy as np
import pytest

from gevrey_nf.normal_form import (
    StatePoint,
    TangentVector,
    apply_L1,
    eval_dF,
    eval_F,
    residual_order,
    residual_profile,
    residual_scale,
    two_route_difference,
    verify_canonical_form,
)
from gevrey_nf.series import HSeries, ZSeries

from conftest import gevrey_q1, rand_h, rand_state, rand_tangent, solved


# --------------------------------------------------------------------------
# an independent oracle: F assembled from plain 2-d coefficient arrays
# --------------------------------------------------------------------------

def _mul(a, b):
    nh, nz = a.shape
    out = np.zeros((nh, nz), dtype=complex)
    for i in range(nh):
        for k in range(nh - i):
            out[i + k] += np.convolve(a[i], b[k])[:nz]
    return out


def _dz(a):
    out = np.zeros_like(a)
    out[:, :-1] = a[:, 1:] * np.arange(1, a.shape[1])
    return out


def _hpow(a, k):
    out = np.zeros_like(a)
    out[k:] = a[: a.shape[0] - k]
    return out


def _one(shape):
    o = np.zeros(shape, dtype=complex)
    o[0, 0] = 1
    return o


def oracle_F(x, q1):
    """F via binomial expansions; no reciprocals or shifts of the library."""
    M, T = x.M, x.T.coeffs.astype(complex)
    shape = T.shape
    zc = np.zeros(shape, dtype=complex)
    zc[0, 1] = 1
    zp = [_one(shape)]
    Tp = [_one(shape)]
    for _ in range(M + 1):
        zp.append(_mul(zp[-1], zc))
        Tp.append(_mul(Tp[-1], T))
    Y = zc + _hpow(T, 1)
    Yp = [_one(shape)]
    for _ in range(M):
        Yp.append(_mul(Yp[-1], Y))
    # B_M = sum_k C(M, k) z^(M-k) h^(k-1) T^k
    BM = sum(comb(M, k) * _hpow(_mul(zp[M - k], Tp[k]), k - 1) for k in range(1, M + 1))
    P = np.zeros(shape, dtype=complex)
    for j, e in enumerate(x.E):
        P += _mul(np.outer(e.coeffs[:, 0], np.eye(1, shape[1])[0]), Yp[j])
    d1, d2 = _dz(T), _dz(_dz(T))
    d3 = _dz(d2)
    # 1/W = sum_k (-h T')^k
    iW, term = _one(shape), _one(shape)
    for _ in range(shape[0]):
        term = -_hpow(_mul(term, d1), 1)
        iW = iW + term
    F = P - BM / 4
    F += _mul(_mul(d1, 2 * _one(shape) + _hpow(d1, 1)), _hpow(P, 1) - Yp[M] / 4)
    F -= 0.5 * _hpow(_mul(d3, iW), 2)
    F += 0.75 * _hpow(_mul(_mul(d2, d2), _mul(iW, iW)), 3)
    n = shape[1] - 4
    return F[:, : n + 1] - q1.coeffs[: shape[0], : n + 1]


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_eval_F_matches_oracle(rng, M):
    x = rand_state(rng, M, 5, 9, 0.6)
    q1 = rand_h(rng, 5, 6)
    F = eval_F(x, q1)
    assert F.h_order == 5 and F.z_order == 6
    assert np.allclose(F.coeffs, oracle_F(x, q1), atol=1e-12)


def test_F_examples():
    x = StatePoint.zero(2, 3, 8)
    assert eval_F(x, HSeries.zero(3, 5)).max_abs() == 0
    F = eval_F(x, HSeries.one(3, 5))
    assert F.coeffs[0, 0] == -1 and np.count_nonzero(F.coeffs) == 1
    # M = 2, T = c: B_2 = 2cz + h c^2, so F = -(2cz + h c^2)/4
    c = 0.7
    T = np.zeros((3, 9))
    T[0, 0] = c
    F = eval_F(StatePoint((HSeries.zero(2, 0),), HSeries(T), 2), HSeries.zero(2, 5))
    expect = np.zeros((3, 6))
    expect[0, 1] = -c / 2
    expect[1, 0] = -c * c / 4
    assert np.allclose(F.coeffs, expect)


@pytest.mark.parametrize("M", [1, 2, 3])
def test_h0_row_is_L1(rng, M):
    x = rand_state(rng, M, 4, 10, 0.8)
    q1 = rand_h(rng, 4, 7)
    F = eval_F(x, q1)
    v = TangentVector(x.E, x.T)
    lhs = apply_L1(v, M, 7)
    assert np.allclose(F.coeffs[0], lhs.coeffs[0] - q1.coeffs[0], atol=1e-14)


# --------------------------------------------------------------------------
# derivative
# --------------------------------------------------------------------------

def test_dF_example():
    x = StatePoint.zero(2, 2, 8)
    dT = np.zeros((3, 9))
    dT[0, 1] = 1
    v = TangentVector((HSeries.one(2, 0),), HSeries(dT))
    d = eval_dF(x, v)
    expect = np.zeros((3, 6))
    expect[0, 0], expect[0, 2] = 1, -1
    assert np.allclose(d.coeffs, expect)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_dF_linear(rng, M):
    x = rand_state(rng, M, 5, 10)
    u, w = rand_tangent(rng, M, 5, 10), rand_tangent(rng, M, 5, 10)
    a, b = 0.3 - 1.1j, 2.0
    lhs = eval_dF(x, u * a + w * b)
    rhs = a * eval_dF(x, u) + b * eval_dF(x, w)
    assert lhs.allclose(rhs, atol=1e-12)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_dF_finite_differences(rng, M):
    x = rand_state(rng, M, 5, 10, 0.5)
    v = rand_tangent(rng, M, 5, 10, 0.5)
    q1 = HSeries.zero(5, 7)
    d = eval_dF(x, v)
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        fd = (eval_F(x + v * eps, q1) - eval_F(x - v * eps, q1)) * (1 / (2 * eps))
        errs.append((fd - d).max_abs())
    assert errs[-1] < 1e-4 * max(1.0, d.max_abs())
    # central differences are second order
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_frechet_ratio(rng):
    M = 3
    x = rand_state(rng, M, 4, 9, 0.5)
    v = rand_tangent(rng, M, 4, 9, 0.5)
    q1 = HSeries.zero(4, 6)
    F0, d = eval_F(x, q1), eval_dF(x, v)
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        rem = (eval_F(x + v * eps, q1) - F0 - eps * d).max_abs()
        ratios.append(rem / eps)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 1e-3


# --------------------------------------------------------------------------
# residual helpers
# --------------------------------------------------------------------------

def test_residual_order_examples():
    F = np.zeros((4, 3))
    assert residual_order(HSeries(F), 1e-10) == 4
    F[2, 1] = 1e-3
    assert residual_order(HSeries(F), 1e-10) == 2
    assert residual_order(HSeries(F), [1e-10, 1e-10, 1e-2, 1e-10]) == 4
    F[0, 0] = 1e-12
    assert residual_order(HSeries(F), 1e-10) == 2
    assert np.allclose(residual_profile(HSeries(F)), [1e-12, 0, 1e-3, 0])
    with pytest.raises(ValueError):
        residual_order(HSeries(F), 0)


def test_residual_scale_is_cumulative():
    T = np.zeros((4, 5))
    T[1, 2] = 50
    T[3, 0] = 7
    q1 = np.zeros((4, 5))
    q1[2, 4] = -300
    s = residual_scale(StatePoint((HSeries.zero(3, 0),), HSeries(T), 2), HSeries(q1))
    assert np.allclose(s, [1, 50, 300, 300])
    s = residual_scale(StatePoint((HSeries.zero(3, 0),), HSeries(T), 2), HSeries(q1), z_order=3)
    assert np.allclose(s, [1, 50, 50, 50])


# --------------------------------------------------------------------------
# canonical form checks on solved problems
# --------------------------------------------------------------------------

@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_canonical_input_verifies(M):
    spec, td, x = solved(M, [0] * M + [-0.25], [[0]], 6, 10)
    assert x.max_abs() == 0
    rep = verify_canonical_form(spec, td, x)
    assert rep.max_residual == 0 and max(rep.braces) < 1e-14


@pytest.mark.parametrize("M", [1, 2, 3])
def test_recursion_solution_verifies(M):
    Q = [0] * M + [-0.25, -0.25, 0.1]
    spec, td, x = solved(M, Q, gevrey_q1(6), 8, 10)
    rep = verify_canonical_form(spec, td, x)
    scale = residual_scale(x, td.q1_tilde, 7)
    assert rep.h0 < 1e-12
    assert all(r < 1e-9 * s for r, s in zip(rep.per_order, scale))
    assert max(rep.braces) < 1e-9 * scale[-1]


def test_corrupted_solution_fails():
    spec, td, x = solved(2, [0, 0, -0.25, -0.25], gevrey_q1(6), 6, 10)
    T = x.T.coeffs.copy()
    T[0, 2] += 1e-3
    bad = StatePoint(x.E, HSeries(T), 2)
    rep = verify_canonical_form(spec, td, bad)
    # h^0 of F sits in per_order[0]; rep.h0 only tests the change of variable
    assert rep.h0 < 1e-12
    assert rep.per_order[0] > 1e-4


@pytest.mark.parametrize("M", [2, 3])
def test_two_routes_agree(rng, M):
    Q = [0] * M + [-0.4, 0.2, -0.1]
    spec, td, x = solved(M, Q, gevrey_q1(6), 6, 10)
    # off-solution points too: the identity holds for every state
    for state in (x, x + rand_tangent(rng, M, 6, 10, 0.3)):
        diff = two_route_difference(spec, td, state)
        F = eval_F(state, td.q1_tilde)
        ref = max(1.0, F.max_abs(), state.max_abs())
        assert diff.max() < 1e-9 * ref


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_dF_richardson(rng, M):
    # removing the eps^2 term leaves an eps^4 error, far below plain central differences
    x = rand_state(rng, M, 6, 12, 0.5)
    v = rand_tangent(rng, M, 6, 12, 0.5)
    q1 = HSeries.zero(6, 9)
    d = eval_dF(x, v)

    def central(eps):
        return (eval_F(x + v * eps, q1) - eval_F(x - v * eps, q1)) * (1 / (2 * eps))

    eps = 2e-3
    rich = (4.0 * central(eps / 2) - central(eps)) * (1 / 3)
    assert (rich - d).max_abs() < 1e-10 * d.max_abs()
