"""Command line: ``hdinfer test | simulate | design-diag``.

Exit codes: 0 success, 2 unusable input or configuration, 3 the
computation itself failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings

import numpy as np

from ._montecarlo import resolve_threads
from .design import (
    build_design,
    detection_bound,
    kappa_diagnostics,
    minvar_holds,
    ridge_covariance,
)
from .estimators import RidgeProjectionTest
from .inference import GroupHypothesis
from .io import (
    InputError,
    build_test_report,
    jsonable,
    read_groups_json,
    read_numeric_csv,
    read_response_csv,
    write_text,
)
from .simlab import ScenarioConfig, projection_bias_histogram, run_scenario

EXIT_OK, EXIT_INPUT, EXIT_PIPELINE = 0, 2, 3

logger = logging.getLogger("hdinfer")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _ridge_lambda(text: str):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("ridge lambda must be positive")
    return value


def _threads(args) -> int:
    try:
        return resolve_threads(args.threads)
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, f"invalid thread count: {exc}") from exc


def _read_xy(args):
    try:
        X, _ = read_numeric_csv(args.x)
        y = read_response_csv(args.y)
    except InputError as exc:
        raise _Fail(EXIT_INPUT, str(exc)) from exc
    if X.shape[0] != y.shape[0]:
        raise _Fail(
            EXIT_INPUT,
            f"dimension mismatch: {args.x} has {X.shape[0]} rows, {args.y} has {y.shape[0]}",
        )
    return X, y


def cmd_test(args) -> int:
    X, y = _read_xy(args)
    n, p = X.shape
    groups = []
    if args.groups:
        try:
            groups = read_groups_json(args.groups, p)
        except InputError as exc:
            raise _Fail(EXIT_INPUT, str(exc)) from exc
    threads = _threads(args)
    est = RidgeProjectionTest(
        alpha=args.alpha,
        ridge_lambda=args.ridge_lambda,
        xi=args.xi,
        zeta=args.zeta,
        groups=groups,
        mc_draws=args.mc_draws,
        seed=args.seed,
        threads=threads,
    )
    try:
        est._check_params()
    except (TypeError, ValueError) as exc:
        raise _Fail(EXIT_INPUT, f"invalid option: {exc}") from exc
    try:
        est.fit(X, y)
    except Exception as exc:  # noqa: BLE001 - any failure here is a pipeline error
        raise _Fail(EXIT_PIPELINE, f"pipeline failed: {type(exc).__name__}: {exc}") from exc
    config = {
        "n": n,
        "p": p,
        "alpha": args.alpha,
        "ridge_lambda": est.ridge_lambda_,
        "xi": args.xi,
        "zeta": args.zeta,
        "mc_draws": args.mc_draws,
        "seed": args.seed,
        "lambda0": est.initial_fit_.lambda0,
    }
    report = build_test_report(est, config)
    text = report.to_json() if args.format == "json" else report.to_csv()
    write_text(text, args.out)
    return EXIT_OK


def _design_diagnostics(X, sigma: float, s0_bound: int) -> dict:
    ctx = build_design(X)
    cov = ridge_covariance(ctx, 1.0 / ctx.n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        kappa, summary, degenerate = kappa_diagnostics(ctx)
        single = detection_bound(ctx, cov, sigma, s0_bound, "single")
        multiple = detection_bound(ctx, cov, sigma, s0_bound, "multiple")
    notes = sorted({str(w.message) for w in caught})
    constant = np.flatnonzero(ctx.constant_mask) + 1
    if constant.size:
        notes.append(f"constant columns excluded from testing: {constant.tolist()}")
    coefficients = [
        {
            "index": j + 1,
            "testable": bool(ctx.testable[j]),
            "projection_diag": float(ctx.projection_diag[j]),
            "kappa": float(kappa[j]),
            "omega_diag": float(cov.omega_diag[j]),
            "detection_single": float(single[j]),
            "detection_multiple": float(multiple[j]),
        }
        for j in range(ctx.p)
    ]
    return {
        "n": ctx.n,
        "p": ctx.p,
        "rank": ctx.r,
        "lambda_min_nonzero": ctx.lambda_min_nonzero,
        "ridge_lambda": cov.lam,
        "omega_min": cov.omega_min,
        "kappa_summary": summary.as_dict(),
        "minvar_holds": bool(minvar_holds(ctx)),
        "detection_sigma": sigma,
        "detection_s0_bound": s0_bound,
        "warnings": notes,
        "coefficients": coefficients,
    }


def cmd_design_diag(args) -> int:
    try:
        X, _ = read_numeric_csv(args.x)
    except InputError as exc:
        raise _Fail(EXIT_INPUT, str(exc)) from exc
    if not args.sigma > 0 or args.s0_bound < 1:
        raise _Fail(EXIT_INPUT, "need --sigma > 0 and --s0-bound >= 1")
    try:
        diag = _design_diagnostics(X, args.sigma, args.s0_bound)
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, str(exc)) from exc
    except Exception as exc:  # noqa: BLE001
        raise _Fail(EXIT_PIPELINE, f"diagnostics failed: {type(exc).__name__}: {exc}") from exc
    if args.format == "json":
        text = json.dumps(jsonable(diag), indent=2) + "\n"
    else:
        buf = io.StringIO()
        rows = diag["coefficients"]
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        text = buf.getvalue()
    write_text(text, args.out)
    return EXIT_OK


def _scenario_groups(size: int, p: int) -> tuple:
    if size is None:
        return ()
    if not 1 <= size <= p:
        raise ValueError(f"--group-size must lie in [1, p], got {size}")
    lead = GroupHypothesis(tuple(range(size)), f"G1-{size}")
    tail = GroupHypothesis(tuple(range(p - size, p)), f"G{p - size + 1}-{p}")
    return (lead, tail) if p - size >= size else (lead,)


def cmd_simulate(args) -> int:
    threads = _threads(args)
    try:
        cfg = ScenarioConfig(
            model=args.model,
            n=args.n,
            p=args.p,
            s0=args.s0,
            b=args.b,
            rho=args.rho,
            sigma=args.sigma,
            reps=args.reps,
            alpha=args.alpha,
            seed=args.seed,
            mc_draws=args.mc_draws,
            groups=_scenario_groups(args.group_size, args.p),
            xi=args.xi,
            zeta=args.zeta,
            threads=threads,
        )
        if cfg.mc_draws < 1000:
            raise ValueError("--mc-draws must be at least 1000")
        if not 0 < cfg.xi < 0.5 or cfg.zeta < 0:
            raise ValueError("need 0 < --xi < 0.5 and --zeta >= 0")
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, f"invalid scenario: {exc}") from exc
    try:
        report = run_scenario(cfg)
        hist = projection_bias_histogram(cfg, bins=args.bins) if args.histogram else None
    except Exception as exc:  # noqa: BLE001
        raise _Fail(EXIT_PIPELINE, f"simulation failed: {type(exc).__name__}: {exc}") from exc
    write_text(json.dumps(jsonable(report.to_dict()), indent=2) + "\n", args.out)
    if hist is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for lo, hi, c in hist.rows():
            w.writerow([repr(lo), repr(hi), c])
        write_text(buf.getvalue(), args.histogram)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdinfer",
        description="Bias-corrected Ridge significance tests for high-dimensional linear models.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed (default 0)")
        p.add_argument(
            "--threads", type=int, default=None,
            help="worker threads (default: $HDINFER_THREADS, else 1)",
        )
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--xi", type=float, default=0.05)
        p.add_argument("--zeta", type=float, default=0.0)
        p.add_argument("--mc-draws", type=int, default=10000)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    t = sub.add_parser("test", help="test every coefficient and optional groups")
    t.add_argument("--x", required=True, help="design CSV, rows are observations")
    t.add_argument("--y", required=True, help="response CSV with one column")
    t.add_argument("--groups", default=None, help="JSON groups file with 1-based indices")
    t.add_argument("--ridge-lambda", type=_ridge_lambda, default="auto")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    common(t)
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run a simulation scenario")
    s.add_argument("--model", type=str.upper, choices=("M1", "M2"), required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--s0", type=int, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--rho", type=float, default=None)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument(
        "--group-size", type=int, default=None,
        help="test the leading k coefficients and the trailing k as groups",
    )
    s.add_argument("--histogram", default=None, help="also write the projection-bias histogram CSV")
    s.add_argument("--bins", type=int, default=50)
    common(s)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("design-diag", help="diagnostics of a design matrix")
    d.add_argument("--x", required=True, help="design CSV, rows are observations")
    d.add_argument("--sigma", type=float, default=1.0, help="noise level for detection bounds")
    d.add_argument("--s0-bound", type=int, default=1, help="sparsity bound for detection bounds")
    d.add_argument("--format", choices=("json", "csv"), default="json")
    d.add_argument("--out", default=None, help="output path (default stdout)")
    d.set_defaults(func=cmd_design_diag)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"hdinfer: error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"hdinfer: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
