"""Compare the numba and pure-numpy kernel paths.

Kernel timings call both kernel tables directly. The end-to-end timing runs a
recursion solve in a subprocess per backend, since the backend is fixed at
import time by GEVREY_NF_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--nh 16] [--nz 40]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from gevrey_nf import _kernels

SOLVE_SNIPPET = """
import json, time
from gevrey_nf import _kernels
from gevrey_nf.pipeline import parse_config, run_pipeline
cfg = parse_config({cfg!r})
run_pipeline(parse_config(dict({cfg!r}, orders={{"h": 2, "z": 4}})))  # warm caches
t0 = time.perf_counter()
res = run_pipeline(cfg)
print(json.dumps({{"backend": _kernels.BACKEND, "seconds": time.perf_counter() - t0,
                  "residual_order": res.report["residuals"]["residual_order"]}}))
"""


def bench_kernels(nh, nz, repeat):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((nh + 1, nz + 1)) + 1j * rng.standard_normal((nh + 1, nz + 1))
    b = rng.standard_normal((nh + 1, nz + 1)) + 1j * rng.standard_normal((nh + 1, nz + 1))
    a[0, 0] = 3.0
    v = np.ascontiguousarray(a[0])
    cases = {
        "conv1d": (v, np.ascontiguousarray(b[0])),
        "conv2d": (a, b),
        "recip1d": (v,),
        "recip2d": (a,),
    }
    rows = []
    for name, args in cases.items():
        times = {}
        outs = {}
        for label, table in (("numpy", _kernels.NUMPY_KERNELS), ("numba", _kernels.NUMBA_KERNELS)):
            if table is None:
                continue
            fn = table[name]
            outs[label] = fn(*args)  # includes compilation for numba
            n = 20
            times[label] = min(timeit.repeat(lambda: fn(*args), number=n, repeat=repeat)) / n
        agree = np.allclose(outs["numpy"], outs.get("numba", outs["numpy"]), rtol=1e-10, atol=1e-10)
        rows.append((name, times, agree))
    return rows


def bench_solve(cfg):
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, GEVREY_NF_DISABLE_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(cfg=cfg)],
                           env=env, capture_output=True, text=True, check=True)
        d = json.loads(r.stdout.strip().splitlines()[-1])
        out[d["backend"]] = d
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nh", type=int, default=16)
    p.add_argument("--nz", type=int, default=40)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--skip-solve", action="store_true")
    args = p.parse_args(argv)

    print(f"kernels on ({args.nh + 1}, {args.nz + 1}) complex arrays, best of {args.repeat}")
    print(f"{'kernel':<8} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}  agree")
    for name, t, agree in bench_kernels(args.nh, args.nz, args.repeat):
        nb = t.get("numba", float("nan"))
        print(f"{name:<8} {t['numpy'] * 1e3:>11.4f} {nb * 1e3:>11.4f} {t['numpy'] / nb:>8.1f}  {agree}")

    if not args.skip_solve:
        cfg = {"M": 2, "Q": [0, 0, -0.25, -0.25],
               "Q1": [[1], [0.3], [0.18], [0.162], [0.1944]], "orders": {"h": 16, "z": 12}}
        res = bench_solve(cfg)
        print("\nrecursion solve, M=2, Nh=16, Nz=12")
        for backend, d in res.items():
            print(f"{backend:<6} {d['seconds']:.3f} s  residual_order={d['residual_order']}")


if __name__ == "__main__":
    main()
