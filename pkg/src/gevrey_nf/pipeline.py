"""End-to-end run: configuration, Liouville transform, solve, verification,
Gevrey diagnostics and serialization."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from numbers import Number

import numpy as np

from . import _kernels
from .liouville import (
    LEADING_ZERO_TOL,
    PotentialSpec,
    assemble_y_of_x,
    estimate_radius,
    exponent_audit,
    jacobian_identity_residual,
    liouville_transform,
    psi_from_y,
)
from .newton import NewtonConfig, NonConvergenceError, solve, z_budget
from .norms import fit_gevrey, rho_norm
from .normal_form import (
    StatePoint,
    eval_F,
    residual_order,
    residual_profile,
    residual_scale,
    verify_canonical_form,
)
from .series import HSeries, ZSeries, compose

REPORT_VERSION = 1
_KEYS = {"M", "Q", "Q1", "orders", "solver", "b0", "tol", "rho0", "s", "output"}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class RunConfig:
    M: int
    Q: tuple
    Q1: tuple
    Nh: int
    Nz: int
    solver: str = "recursion"
    b0: int = 8
    tol: float = 1e-10
    rho0: float | None = None
    s: float = 0.5
    output: str | None = None

    def echo(self) -> dict:
        d = asdict(self)
        d["Q"] = [_cjson(c) for c in self.Q]
        d["Q1"] = [[_cjson(c) for c in row] for row in self.Q1]
        return d


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------

def _number(v, path) -> complex:
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(v, Number):
        c = complex(v)
    elif isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(p, Number) and not isinstance(p, bool) for p in v
    ):
        c = complex(v[0], v[1])
    else:
        raise ConfigError(path, "expected a real number or a [re, im] pair")
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise ConfigError(path, "must be finite")
    return c


def _int(v, path, lo=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, "expected an integer")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be >= {lo}")
    return v


def _real(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, "expected a real number")
    return float(v)


def parse_config(source, overrides: dict | None = None) -> RunConfig:
    """Validate a JSON config (a path or an already-loaded dict) and apply defaults.

    ``overrides`` (from the command line) replace ``solver``, ``order_h``,
    ``order_z`` and ``output`` before validation.
    """
    if isinstance(source, dict):
        doc = dict(source)
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("<file>", f"no such file: {source}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in ("M", "Q"):
        if key not in doc:
            raise ConfigError(key, "required")

    M = _int(doc["M"], "M", lo=1)
    if not isinstance(doc["Q"], list) or not doc["Q"]:
        raise ConfigError("Q", "expected a non-empty array")
    Q = tuple(_number(v, f"Q[{i}]") for i, v in enumerate(doc["Q"]))
    if len(Q) <= M:
        raise ConfigError("Q", f"must list coefficients through x^{M}")
    for i in range(M):
        if abs(Q[i]) >= LEADING_ZERO_TOL:
            raise ConfigError(f"Q[{i}]", f"PotentialSpec requires Q to vanish to order M={M} at 0")
    if Q[M] == 0:
        raise ConfigError(f"Q[{M}]", "PotentialSpec requires Q^(M)(0) != 0")

    raw_q1 = doc.get("Q1", [[0]])
    if not isinstance(raw_q1, list) or not raw_q1:
        raise ConfigError("Q1", "expected a non-empty array of arrays")
    Q1 = []
    for n, row in enumerate(raw_q1):
        if not isinstance(row, list) or not row:
            raise ConfigError(f"Q1[{n}]", "expected a non-empty array")
        Q1.append(tuple(_number(v, f"Q1[{n}][{i}]") for i, v in enumerate(row)))

    orders = doc.get("orders", {})
    if not isinstance(orders, dict):
        raise ConfigError("orders", "expected an object with keys h and z")
    extra = sorted(set(orders) - {"h", "z"})
    if extra:
        raise ConfigError(f"orders.{extra[0]}", "unknown key")
    Nh = overrides.get("order_h", orders.get("h", 12))
    Nz = overrides.get("order_z", orders.get("z", 12))
    Nh = _int(Nh, "orders.h", lo=0)
    Nz = _int(Nz, "orders.z", lo=3)

    solver = overrides.get("solver", doc.get("solver", "recursion"))
    if solver not in ("recursion", "newton"):
        raise ConfigError("solver", "must be 'recursion' or 'newton'")
    b0 = _int(doc.get("b0", 8), "b0", lo=8)
    if solver == "newton" and Nh < b0:
        raise ConfigError("orders.h", f"newton mode needs orders.h >= b0 = {b0}")
    tol = _real(doc.get("tol", 1e-10), "tol")
    if not tol > 0:
        raise ConfigError("tol", "must be positive")
    rho0 = doc.get("rho0")
    if rho0 is not None:
        rho0 = _real(rho0, "rho0")
        if not rho0 > 0:
            raise ConfigError("rho0", "must be positive")
    s = _real(doc.get("s", 0.5), "s")
    if not 0 < s <= 1:
        raise ConfigError("s", "must lie in (0, 1]")
    output = overrides.get("output", doc.get("output"))
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "expected a path string")
    return RunConfig(M=M, Q=Q, Q1=tuple(Q1), Nh=Nh, Nz=Nz, solver=solver, b0=b0,
                     tol=tol, rho0=rho0, s=s, output=output)


# --------------------------------------------------------------------------
# serialization helpers
# --------------------------------------------------------------------------

def _cjson(c) -> list:
    c = complex(c)
    return [c.real, c.imag]


def _table(a: np.ndarray) -> list:
    return [[_cjson(v) for v in row] for row in np.atleast_2d(a)]


def _from_table(t) -> np.ndarray:
    return np.array([[complex(v[0], v[1]) for v in row] for row in t], dtype=np.complex128)


def _fmt_complex(c: complex) -> str:
    return f"{c.real!r}{'+' if c.imag >= 0 or math.isnan(c.imag) else '-'}{abs(c.imag)!r}i"


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a).ravel()]


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

@dataclass
class PipelineResult:
    config: RunConfig
    spec: PotentialSpec
    td: object
    state: StatePoint
    y: HSeries
    psi: HSeries
    report: dict
    trace: object = None
    timing: dict = field(default_factory=dict)


def working_orders(cfg: RunConfig):
    """(working z-order of the solve, z-order at which Q and Q1 are stored)."""
    nzw = cfg.Nz + z_budget(cfg.M, cfg.Nh)
    return nzw, nzw + cfg.M + 3


def build_problem(cfg: RunConfig):
    nzw, nzq = working_orders(cfg)
    q1_rows = [list(r) for r in cfg.Q1]
    if len(cfg.Q) - 1 > nzq:
        raise ConfigError("Q", f"degree exceeds the working order {nzq}")
    spec = PotentialSpec.from_coefficients(cfg.M, list(cfg.Q), q1_rows, cfg.Nh, nzq)
    return spec, nzw


def default_rho0(M: int, td) -> float:
    """``min(1/(2M), estimated radius of x(z))``."""
    return float(min(1.0 / (2 * M), estimate_radius(td.x_of_z)))


def _gevrey(samples) -> dict | None:
    if len(samples) < 3:
        return None
    fit = fit_gevrey(samples)
    return {"C0": fit.C0, "tau": fit.tau, "max_order_used": fit.max_order_used,
            "residual": fit.residual, "samples": _floats(samples)}


def _state_diagnostics(cfg, td, x: StatePoint, y: HSeries, psi: HSeries, rho0: float) -> dict:
    r = rho0 / 2.0
    fits = {
        "T": _gevrey([rho_norm(p, r) for p in x.T]),
        "y": _gevrey([rho_norm(p, r) for p in y]),
        "psi": _gevrey([rho_norm(p, r) for p in psi]),
        "E": _gevrey([float(sum(abs(e.coeffs[n, 0]) for e in x.E)) for n in range(x.nh + 1)])
        if x.E else None,
    }
    for f in fits.values():
        if f is not None:
            # GevConv-style diagnostic only; no claim about the proof's constants
            f["tau_C0_below_1_minus_s"] = bool(f["tau"] * f["C0"] < 1 - cfg.s)
    return fits


def residual_summary(cfg: RunConfig, spec, td, x: StatePoint, y=None, psi=None) -> dict:
    F = eval_F(x, td.q1_tilde)
    scale = residual_scale(x, td.q1_tilde, cfg.Nz)
    prof = residual_profile(F)
    ro = residual_order(F, cfg.tol * scale)
    canon = verify_canonical_form(spec, td, x, psi, y)
    return {
        "eval_F_per_order": _floats(prof),
        "scale_per_order": _floats(scale),
        "tol": cfg.tol,
        "residual_order": ro,
        "canonical_h0": canon.h0,
        "canonical_per_order": list(canon.per_order),
        "braces_per_order": list(canon.braces),
        "z_order_checked": canon.z_order,
        "passed": ro >= cfg.Nh + 1,
    }


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Liouville transform, solve, assemble y and psi, verify, diagnose."""
    timing = {}
    t0 = time.perf_counter()
    spec, nzw = build_problem(cfg)
    td = liouville_transform(spec)
    t1 = time.perf_counter()
    timing["liouville_s"] = t1 - t0

    ncfg = NewtonConfig(Nh=cfg.Nh, Nz=nzw, b0=cfg.b0, tol=cfg.tol, mode=cfg.solver,
                        window_z=cfg.Nz - 3)
    full, trace = solve(td.q1_tilde, cfg.M, ncfg)
    x = full.truncate(z_order=cfg.Nz)
    t2 = time.perf_counter()
    timing["solve_s"] = t2 - t1

    y = assemble_y_of_x(td, x.T)
    psi = psi_from_y(y)
    residuals = residual_summary(cfg, spec, td, x, y, psi)
    rho0 = cfg.rho0 if cfg.rho0 is not None else default_rho0(cfg.M, td)
    fits = _state_diagnostics(cfg, td, x, y, psi, rho0)
    t3 = time.perf_counter()
    timing["verify_s"] = t3 - t2

    n = cfg.Nz
    ident = jacobian_identity_residual(spec, td.x_of_z).truncate(n)
    zx = td.z_of_x.truncate(n)
    rev = compose(zx, td.x_of_z.truncate(n)) - ZSeries.variable(n)
    transform = {
        "A": td.A_const,
        "z_exponent": str(td.z_exponent),
        "exponent_audit": exponent_audit(cfg.M),
        "identity_residual": ident.max_abs(),
        "reversion_residual": rev.max_abs(),
        "z_of_x": [_cjson(c) for c in zx.coeffs],
        "x_of_z": [_cjson(c) for c in td.x_of_z.truncate(n).coeffs],
        "working_z_order": nzw,
    }
    report = {
        "version": REPORT_VERSION,
        "config": cfg.echo(),
        "backend": _kernels.BACKEND,
        "transform": transform,
        "solution": {
            "E": [_table(e.coeffs.T)[0] for e in x.E],
            "T": _table(x.T.coeffs),
            "T_norms": [rho_norm(p, rho0 / 2.0) for p in x.T],
            "y": _table(y.coeffs),
            "psi": _table(psi.coeffs),
        },
        "residuals": residuals,
        "diagnostics": {"rho0": rho0, "s": cfg.s, "gevrey": fits},
        "newton_trace": trace.as_dict() if trace is not None else None,
        "status": "ok" if residuals["passed"] else "residual_failure",
    }
    timing["total_s"] = time.perf_counter() - t0
    report["timing"] = timing
    return PipelineResult(cfg, spec, td, x, y, psi, report, trace, timing)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def dump_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, allow_nan=True)
        fh.write("\n")


def report_bytes(report: dict, drop_timing: bool = True) -> bytes:
    d = {k: v for k, v in report.items() if not (drop_timing and k == "timing")}
    return json.dumps(d, indent=1).encode()


def state_from_report(report: dict) -> StatePoint:
    sol = report["solution"]
    M = report["config"]["M"]
    T = HSeries(_from_table(sol["T"]))
    E = tuple(HSeries.scalar(_from_table([row])[0], T.h_order) for row in sol["E"])
    return StatePoint(E, T, M)


def config_from_report(report: dict) -> RunConfig:
    c = dict(report["config"])
    return RunConfig(
        M=c["M"],
        Q=tuple(complex(*v) for v in c["Q"]),
        Q1=tuple(tuple(complex(*v) for v in row) for row in c["Q1"]),
        Nh=c["Nh"], Nz=c["Nz"], solver=c["solver"], b0=c["b0"], tol=c["tol"],
        rho0=c["rho0"], s=c["s"], output=c["output"],
    )


@dataclass
class VerifyResult:
    ok: bool
    max_deviation: float
    mismatches: list


def verify_report(report: dict, rtol: float = 1e-12) -> VerifyResult:
    """Recompute residuals from the stored coefficients and compare with the stored ones."""
    cfg = config_from_report(report)
    spec, _ = build_problem(cfg)
    td = liouville_transform(spec)
    x = state_from_report(report)
    fresh = residual_summary(cfg, spec, td, x)
    stored = report["residuals"]
    mismatches = []
    worst = 0.0
    for key in ("eval_F_per_order", "canonical_per_order", "braces_per_order", "scale_per_order"):
        a = np.asarray(stored[key], dtype=float)
        b = np.asarray(fresh[key], dtype=float)
        if a.shape != b.shape:
            mismatches.append(f"{key}: length {a.shape[0]} != {b.shape[0]}")
            continue
        dev = np.abs(a - b) / np.maximum(1.0, np.abs(b))
        worst = max(worst, float(dev.max(initial=0.0)))
        if np.any(dev > rtol):
            mismatches.append(f"{key}: deviation {dev.max():.3e}")
    for key in ("residual_order", "canonical_h0"):
        a, b = stored[key], fresh[key]
        if abs(a - b) > rtol * max(1.0, abs(b)):
            mismatches.append(f"{key}: stored {a!r}, recomputed {b!r}")
    return VerifyResult(ok=not mismatches, max_deviation=worst, mismatches=mismatches)


def write_csv(result: PipelineResult, directory: str) -> list:
    """One CSV per series: rows are h-orders, columns are z-orders."""
    os.makedirs(directory, exist_ok=True)
    x = result.state
    tables = {"T": x.T.coeffs, "y": result.y.coeffs, "psi": result.psi.coeffs}
    for j, e in enumerate(x.E):
        tables[f"E{j}"] = e.coeffs
    paths = []
    for name, arr in tables.items():
        path = os.path.join(directory, f"{name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["h_order"] + [f"z{k}" for k in range(arr.shape[1])])
            for n, row in enumerate(arr):
                w.writerow([n] + [_fmt_complex(complex(v)) for v in row])
        paths.append(path)
    return paths


__all__ = [
    "ConfigError",
    "NonConvergenceError",
    "PipelineResult",
    "RunConfig",
    "dump_report",
    "parse_config",
    "run_pipeline",
    "verify_report",
    "write_csv",
]
