"""Hot convolution kernels for truncated (h, z) power series.

Two interchangeable implementations live here: numba-compiled loops and a
pure-numpy path. The numba path is used when numba imports cleanly and the
environment variable ``GEVREY_NF_DISABLE_NUMBA`` is unset (or ``0``).

All kernels take complex128 arrays and return freshly allocated arrays; the
caller's inputs are never mutated.
"""

import os

import numpy as np

ENV_FLAG = "GEVREY_NF_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(ENV_FLAG, "0").strip().lower() in ("", "0", "false", "no")


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

def conv1d_numpy(a, b):
    n = a.shape[0]
    return np.convolve(a, b)[:n]


def conv2d_numpy(a, b):
    nh, nz = a.shape
    out = np.zeros((nh, nz), dtype=np.complex128)
    rows_a = np.flatnonzero(np.any(a != 0, axis=1))
    rows_b = np.flatnonzero(np.any(b != 0, axis=1))
    for i in rows_a:
        for j in rows_b:
            if i + j >= nh:
                break
            out[i + j] += np.convolve(a[i], b[j])[:nz]
    return out


def recip1d_numpy(a):
    n = a.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    inv0 = 1.0 / a[0]
    out[0] = inv0
    for k in range(1, n):
        out[k] = -inv0 * np.dot(a[1:k + 1], out[k - 1::-1])
    return out


def recip2d_numpy(a):
    nh, nz = a.shape
    out = np.zeros((nh, nz), dtype=np.complex128)
    inv0 = recip1d_numpy(a[0])
    out[0] = inv0
    for n in range(1, nh):
        acc = np.zeros(nz, dtype=np.complex128)
        for k in range(1, n + 1):
            if a[k].any():
                acc += np.convolve(a[k], out[n - k])[:nz]
        out[n] = -np.convolve(inv0, acc)[:nz]
    return out


NUMPY_KERNELS = {
    "conv1d": conv1d_numpy,
    "conv2d": conv2d_numpy,
    "recip1d": recip1d_numpy,
    "recip2d": recip2d_numpy,
}


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


NUMBA_KERNELS = None

if njit is not None:

    @njit(cache=True)
    def conv1d_numba(a, b):
        n = a.shape[0]
        out = np.zeros(n, dtype=np.complex128)
        for i in range(n):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(n - i):
                out[i + j] += ai * b[j]
        return out

    @njit(cache=True)
    def _first_nonzero_row(a):
        nh, nz = a.shape
        for i in range(nh):
            for k in range(nz):
                if a[i, k] != 0:
                    return i
        return nh

    @njit(cache=True)
    def conv2d_numba(a, b):
        nh, nz = a.shape
        out = np.zeros((nh, nz), dtype=np.complex128)
        ia = _first_nonzero_row(a)
        ib = _first_nonzero_row(b)
        for i in range(ia, nh):
            for j in range(ib, nh - i):
                for k in range(nz):
                    aik = a[i, k]
                    if aik == 0:
                        continue
                    for m in range(nz - k):
                        out[i + j, k + m] += aik * b[j, m]
        return out

    @njit(cache=True)
    def recip1d_numba(a):
        n = a.shape[0]
        out = np.zeros(n, dtype=np.complex128)
        inv0 = 1.0 / a[0]
        out[0] = inv0
        for k in range(1, n):
            acc = 0j
            for i in range(1, k + 1):
                acc += a[i] * out[k - i]
            out[k] = -inv0 * acc
        return out

    @njit(cache=True)
    def recip2d_numba(a):
        # Lexicographic recursive division: (n, k) only needs entries (m, l)
        # with m < n, or m == n and l < k.
        nh, nz = a.shape
        out = np.zeros((nh, nz), dtype=np.complex128)
        inv00 = 1.0 / a[0, 0]
        for n in range(nh):
            for k in range(nz):
                acc = 1.0 + 0j if (n == 0 and k == 0) else 0j
                for i in range(n + 1):
                    for j in range(k + 1):
                        if i == 0 and j == 0:
                            continue
                        aij = a[i, j]
                        if aij != 0:
                            acc -= aij * out[n - i, k - j]
                out[n, k] = acc * inv00
        return out

    NUMBA_KERNELS = {
        "conv1d": conv1d_numba,
        "conv2d": conv2d_numba,
        "recip1d": recip1d_numba,
        "recip2d": recip2d_numba,
    }


if NUMBA_KERNELS is not None and _numba_requested():
    BACKEND = "numba"
    _ACTIVE = NUMBA_KERNELS
else:
    BACKEND = "numpy"
    _ACTIVE = NUMPY_KERNELS


def conv1d(a, b):
    """Cauchy product of two equal-length coefficient vectors, truncated."""
    return _ACTIVE["conv1d"](a, b)


def conv2d(a, b):
    """Cauchy product in both h (axis 0) and z (axis 1), truncated to shape."""
    return _ACTIVE["conv2d"](a, b)


def recip1d(a):
    return _ACTIVE["recip1d"](a)


def recip2d(a):
    return _ACTIVE["recip2d"](a)


def warmup():
    """Trigger JIT compilation so later timings exclude it."""
    x1 = np.array([1.0, 0.5], dtype=np.complex128)
    x2 = np.array([[1.0, 0.5], [0.25, 0.0]], dtype=np.complex128)
    conv1d(x1, x1)
    conv2d(x2, x2)
    recip1d(x1)
    recip2d(x2)
