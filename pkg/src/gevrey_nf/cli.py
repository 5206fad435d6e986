"""Command line: ``reduce``, ``verify`` and ``check-inequalities``.

Exit codes: 0 success, 2 validation error, 3 residual failure or report
mismatch, 4 Newton non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .newton import NonConvergenceError
from .norms import EXACT_FACTORIAL_CAP, check_composition_inequality, check_pair_inequality
from .pipeline import ConfigError, dump_report, parse_config, run_pipeline, verify_report, write_csv
from .series import SeriesError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESIDUAL = 3
EXIT_NONCONVERGENCE = 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_reduce(args) -> int:
    overrides = {"solver": args.solver, "order_h": args.order_h, "order_z": args.order_z,
                 "output": args.output}
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        _err(f"config {exc}")
        return EXIT_VALIDATION
    try:
        result = run_pipeline(cfg)
    except NonConvergenceError as exc:
        _err(f"newton: {exc}")
        return EXIT_NONCONVERGENCE
    except (SeriesError, ValueError) as exc:
        _err(f"pipeline: {exc}")
        return EXIT_VALIDATION
    report = result.report
    if cfg.output:
        dump_report(report, cfg.output)
    else:
        json.dump(report, sys.stdout, indent=1)
        sys.stdout.write("\n")
    if args.csv_dir:
        write_csv(result, args.csv_dir)
    res = report["residuals"]
    print(
        f"{cfg.solver}: M={cfg.M} Nh={cfg.Nh} Nz={cfg.Nz} residual_order={res['residual_order']} "
        f"status={report['status']} ({report['timing']['total_s']:.3f} s)",
        file=sys.stderr,
    )
    return EXIT_OK if res["passed"] else EXIT_RESIDUAL


def cmd_verify(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
        out = verify_report(report)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        _err(f"cannot verify {args.report}: {exc}")
        return EXIT_VALIDATION
    if out.ok:
        print(f"verified: residuals reproduced (max relative deviation {out.max_deviation:.3e})")
        return EXIT_OK
    for m in out.mismatches:
        print(f"mismatch: {m}")
    return EXIT_RESIDUAL


def cmd_check_inequalities(args) -> int:
    if args.max_j > EXACT_FACTORIAL_CAP:
        _err(f"max-j {args.max_j} exceeds the exact-arithmetic cap {EXACT_FACTORIAL_CAP}")
        return EXIT_VALIDATION
    if args.max_j < 1:
        _err("max-j must be >= 1")
        return EXIT_VALIDATION
    failures = 0
    rows = []
    for j in range(1, args.max_j + 1):
        comp = all(check_composition_inequality(j, k) for k in range(1, j + 1))
        pair = check_pair_inequality(j)
        failures += (not comp) + (not pair)
        rows.append((j, comp, pair))
    print("j  composition  pair")
    print(f"0  -            {'pass' if check_pair_inequality(0) else 'FAIL'}")
    for j, comp, pair in rows:
        print(f"{j:<2} {'pass' if comp else 'FAIL':<12} {'pass' if pair else 'FAIL'}")
    print("all pass" if failures == 0 else f"{failures} failures")
    return EXIT_OK if failures == 0 else EXIT_RESIDUAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gevrey-nf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="compute y, E_j and psi for a config")
    r.add_argument("--config", required=True)
    r.add_argument("--solver", choices=("recursion", "newton"))
    r.add_argument("--order-h", type=int, dest="order_h")
    r.add_argument("--order-z", type=int, dest="order_z")
    r.add_argument("--output")
    r.add_argument("--csv-dir", dest="csv_dir")
    r.set_defaults(func=cmd_reduce)

    v = sub.add_parser("verify", help="re-verify a stored report")
    v.add_argument("--report", required=True)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("check-inequalities", help="exhaustive factorial-sum checks")
    c.add_argument("--max-j", type=int, dest="max_j", default=EXACT_FACTORIAL_CAP)
    c.set_defaults(func=cmd_check_inequalities)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
