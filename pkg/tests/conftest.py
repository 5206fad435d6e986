import math

import numpy as np
import pytest

from gevrey_nf import _kernels
from gevrey_nf.series import HSeries, ZSeries


ACCEPTANCE = {}


def record(n, ok, detail):
    """Store one acceptance line; printed at the end of the run."""
    ACCEPTANCE[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[n])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    # keep compilation out of every timed test
    _kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def rand_z(rng, order, scale=1.0, complex_=True):
    c = rng.uniform(-1, 1, order + 1)
    if complex_:
        c = c + 1j * rng.uniform(-1, 1, order + 1)
    return ZSeries(c * scale)


def rand_h(rng, h_order, z_order, scale=1.0):
    shape = (h_order + 1, z_order + 1)
    return HSeries((rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)) * scale)


def gevrey_q1(count=9, tau=0.3):
    """Rows of Q1(x, h) = sum_{n < count} n! tau^n h^n (constant in x)."""
    return [[math.factorial(n) * tau ** n] for n in range(count)]


def rand_state(rng, M, nh, nz, scale=0.3):
    """A random state with coefficients decaying like ``scale^(n+k)``."""
    from gevrey_nf.normal_form import StatePoint

    damp = scale ** np.add.outer(np.arange(nh + 1), np.arange(nz + 1))
    T = HSeries(rand_h(rng, nh, nz).coeffs * damp)
    E = tuple(HSeries(rand_h(rng, nh, 0).coeffs * damp[:, :1]) for _ in range(M - 1))
    return StatePoint(E, T, M)


def rand_tangent(rng, M, nh, nz, scale=0.3):
    from gevrey_nf.normal_form import TangentVector

    x = rand_state(rng, M, nh, nz, scale)
    return TangentVector(x.E, x.T)


def solved(M, Q, Q1, Nh, Nz):
    """(spec, td, state) from the recursion at working z-order, truncated to ``Nz``."""
    from gevrey_nf.liouville import liouville_transform
    from gevrey_nf.newton import solve_recursive
    from gevrey_nf.pipeline import build_problem, parse_config

    cfg = parse_config({"M": M, "Q": Q, "Q1": Q1, "orders": {"h": Nh, "z": Nz}})
    spec, nzw = build_problem(cfg)
    td = liouville_transform(spec)
    x = solve_recursive(td.q1_tilde, M, Nh, nzw).truncate(z_order=Nz)
    return spec, td, x
