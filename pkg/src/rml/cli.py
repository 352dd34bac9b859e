"""Batch experiment runner.

Subcommands: params, run, audit, bias, censored, clt.  Exit codes are a
stable contract: 0 success, 1 scientific check failed, 2 invalid input,
3 degenerate experiment.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, montecarlo, oracle
from .config import ConfigView, build_experiment, build_process, load_config
from .errors import (AllExcluded, ConfigError, DegenerateDenominator,
                     InvalidParams, InvalidSpec, RmlError, StateSpaceTooLarge,
                     TooManyExclusions, UnsupportedCombination,
                     UnsupportedKernel)
from .kernels import make_kernel, verify_order
from .montecarlo import clt_check, fit_rate, replicate, write_norms_csv, write_summary_json
from .nw import censored_cov_estimate, get_model
from .params import (DependenceSpec, RawExponents, check_dependence,
                     regression_feasible, regression_threshold,
                     thm1_exponents, validate_params)
from .processes import SeedSpec, censored as censored_spec, simulate_censored
from .ratio import SLACK_TOL, lemma2_randomized_audit, pisier_check, write_audit_csv

EXIT_OK = 0
EXIT_SCIENCE_FAIL = 1
EXIT_BAD_INPUT = 2
EXIT_DEGENERATE = 3

_INPUT_ERRORS = (ConfigError, InvalidParams, InvalidSpec, UnsupportedKernel,
                 UnsupportedCombination, StateSpaceTooLarge)
_DEGENERATE_ERRORS = (TooManyExclusions, DegenerateDenominator, AllExcluded)


def resolve_config_path(name):
    """Accept a file path or the bare name of a shipped config."""
    path = Path(name)
    if path.exists():
        return path
    if "/" not in str(name):
        stem = str(name)
        if not stem.endswith(".cfg"):
            stem += ".cfg"
        packaged = resources.files("rml").joinpath("configs", stem)
        if packaged.is_file():
            return Path(str(packaged))
    raise ConfigError(f"config file not found: {name}")


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------

def cmd_params(args):
    p, q = args.p, args.q
    if args.r is None or args.s is None:
        r, s = thm1_exponents(p, q)
        print(f"thm1 exponents: r = {r:.12g}, s = {s:.12g}")
    else:
        r, s = args.r, args.s
    try:
        params = validate_params(p, q, r, s)
        print(f"alpha = {params.alpha:.12g}")
        print(f"beta  = {params.beta:.12g}")
    except InvalidParams as exc:
        if args.r is None or args.s is None:
            raise
        # threshold arithmetic below stays meaningful outside the bound's gate
        params = RawExponents(p, q, r, s)
        print(f"note: moment-bound gate not met ({exc}); "
              "thresholds computed from the raw exponents")
    if args.d is not None and args.rho is not None:
        threshold = regression_threshold(params, args.d)
        ok = regression_feasible(params, args.d, args.rho)
        print(f"regularity threshold = {threshold:.12g}; "
              f"rho = {args.rho:g} -> {'satisfied' if ok else 'NOT satisfied'}")
    if args.dep is not None:
        dep = DependenceSpec(args.dep,
                             math.inf if args.decay is None else args.decay,
                             args.aux)
        report = check_dependence(dep, params, args.setting,
                                  d=args.d or 1, rho=args.rho)
        print(f"{report.proposition_id}: threshold = {report.threshold:.12g}, "
              f"supplied = {report.supplied:.12g} -> "
              f"{'satisfied' if report.satisfied else 'NOT satisfied'}")
        for w in report.warnings:
            print(f"  note: {w}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _manifest(config_path, digest, seed, outputs, started, finished):
    return {
        "config": str(config_path),
        "config_digest_sha256": digest,
        "master_seed": seed,
        "tool_version": __version__,
        "started_utc": started,
        "finished_utc": finished,
        "outputs": [str(p) for p in outputs],
    }


def _utcnow():
    return datetime.now(timezone.utc).isoformat()


def cmd_run(args):
    config_path = resolve_config_path(args.config)
    mapping, digest = load_config(config_path)
    config = build_experiment(mapping)
    started = _utcnow()
    table = replicate(config)
    fit = fit_rate(table)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = config_path.stem
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}_summary.json"
    with open(csv_path, "w") as fh:
        write_norms_csv(table, fh)
    with open(json_path, "w") as fh:
        write_summary_json(fit, config, fh)
    manifest_path = out_dir / f"{stem}_manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(_manifest(config_path, digest, config.master_seed,
                            [csv_path, json_path], started, _utcnow()),
                  fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"slope = {fit.slope:.5f} +- {fit.slope_stderr:.5f} "
          f"(theoretical {-fit.theoretical:.5f}, tol {fit.tolerance:g}, "
          f"abscissa {fit.abscissa})")
    print(f"wrote {csv_path}, {json_path}, {manifest_path}")
    if not fit.passed:
        print("rate check FAILED", file=sys.stderr)
        return EXIT_SCIENCE_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

def cmd_audit(args):
    if args.kind == "lemma2":
        summary = lemma2_randomized_audit(args.trials, seed=args.seed,
                                          keep_rows=args.csv is not None)
        print(f"lemma2 audit: {summary.audited} audited, "
              f"{summary.excluded} excluded, min relative slack "
              f"{summary.min_rel_slack:.3e}")
        if args.csv:
            with open(args.csv, "w") as fh:
                write_audit_csv(summary, fh)
            print(f"wrote {args.csv}")
        if summary.violations:
            print(f"VIOLATION at trial {summary.worst_trial} "
                  f"(seed {args.seed})", file=sys.stderr)
            return EXIT_SCIENCE_FAIL
        return EXIT_OK
    if args.kind == "pisier":
        gen = np.random.Generator(
            np.random.Philox(key=np.array([args.seed, 1], dtype=np.uint64)))
        violations = 0
        for t in range(args.trials):
            n = int(gen.integers(1, 101))
            v = gen.standard_t(3, n) * gen.uniform(0.1, 10.0)
            e = gen.uniform(0.1, 5.0)
            lhs, rhs = pisier_check(v, e)
            if lhs > rhs * (1.0 + SLACK_TOL):
                violations += 1
                print(f"VIOLATION at trial {t} (seed {args.seed})",
                      file=sys.stderr)
        print(f"pisier audit: {args.trials} trials, {violations} violations")
        return EXIT_SCIENCE_FAIL if violations else EXIT_OK
    # kernel
    kernel = make_kernel(args.name, args.d)
    report = verify_order(kernel)
    print(f"kernel {args.name} d={args.d}: integral = {report.integral:.12g}, "
          f"max low moment = {report.max_low_moment:.3e}, "
          f"order = {report.order} "
          f"(first nonvanishing {report.first_nonvanishing} = {report.first_value:.6g})")
    if not report.ok or report.order > 2:
        print("kernel verification FAILED", file=sys.stderr)
        return EXIT_SCIENCE_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# bias
# ---------------------------------------------------------------------------

def cmd_bias(args):
    config_path = resolve_config_path(args.config)
    mapping, _ = load_config(config_path)
    view = ConfigView(mapping)
    model = get_model(view.get_str("model", "sin_gauss"))
    kernel = make_kernel(view.get_str("kernel", "epanechnikov"),
                         view.get_int("dim", 1))
    x = view.get_float("x", required=True)
    h_grid = view.get_float_list("h_grid", required=True)
    rho = view.get_float("rho", model.rho)
    tol = view.get_float("slope_tol", 0.2)

    biases = [oracle.bias_at(model, kernel, x, h) for h in h_grid]
    for h, b in zip(h_grid, biases):
        print(f"h = {h:<10g} bias = {b:.8e}")
    if all(b == 0.0 for b in biases):
        print("all biases are exactly zero (constant regression)")
        return EXIT_OK
    if any(b <= 0.0 for b in biases):
        print("zero bias in a nonconstant sweep; cannot fit a slope",
              file=sys.stderr)
        return EXIT_DEGENERATE
    slope = float(np.polyfit(np.log(h_grid), np.log(biases), 1)[0])
    print(f"log-log bias slope = {slope:.4f} (target {rho:g} +- {tol:g})")
    if abs(slope - rho) > tol:
        print("bias order check FAILED", file=sys.stderr)
        return EXIT_SCIENCE_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# censored
# ---------------------------------------------------------------------------

def cmd_censored(args):
    config_path = resolve_config_path(args.config)
    mapping, _ = load_config(config_path)
    view = ConfigView(mapping)
    kind = view.get_str("process.kind", "censored")
    if kind != "censored":
        raise ConfigError("censored command needs process.kind = censored")
    spec = build_process(view)
    n = view.get_int("n", 100_000)
    ell_max = view.get_int("ell_max", 5)
    reps = view.get_int("replications", 8)
    seed = view.get_int("seed", required=True)

    estimates = np.empty((reps, ell_max))
    for j in range(reps):
        path = simulate_censored(spec, n, SeedSpec(seed, j))
        estimates[j] = censored_cov_estimate(path, ell_max)
    truth = spec.truth["gamma_X"](np.arange(1, ell_max + 1))
    mean = estimates.mean(axis=0)
    se = estimates.std(axis=0, ddof=1) / math.sqrt(reps)
    ok = True
    for ell in range(ell_max):
        gap = abs(mean[ell] - truth[ell])
        line_ok = gap <= 3.0 * se[ell]
        ok = ok and line_ok
        print(f"lag {ell + 1}: estimate = {mean[ell]:.6f} (se {se[ell]:.2e}), "
              f"truth = {truth[ell]:.6f} -> {'ok' if line_ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_SCIENCE_FAIL


# ---------------------------------------------------------------------------
# clt
# ---------------------------------------------------------------------------

def cmd_clt(args):
    config_path = resolve_config_path(args.config)
    mapping, _ = load_config(config_path)
    view = ConfigView(mapping)
    p_prime = view.get_float("p_prime", 1.0)
    gap_tol = view.get_float("gap_tol", 0.05)
    # route single-n configs through the standard experiment builder
    if "n_grid" not in mapping and view.has("n"):
        n = view.get_int("n")
        mapping = dict(mapping)
        mapping["n_grid"] = (f"{max(4, n // 4)},{max(5, n // 2)},{n}", 0)
        mapping.setdefault("estimator", ("weighted_sum", 0))
        mapping.setdefault("q", (str(2 * view.get_float("p", 2.0)), 0))
    config = build_experiment(mapping)
    result = clt_check(config, p_prime)
    print(f"sqrt(n) ||Delta||_{p_prime:g} = {result.lhs:.6f} at n = {result.n}; "
          f"normal limit = {result.limit:.6f} (sigma = {result.sigma:.6f}); "
          f"relative gap = {result.rel_gap:.2%}")
    if result.rel_gap > gap_tol:
        print("distributional check FAILED", file=sys.stderr)
        return EXIT_SCIENCE_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="rml",
        description="ratio estimators, moment bounds, and Monte Carlo rate checks")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_params = sub.add_parser("params", help="exponent algebra and thresholds")
    p_params.add_argument("--p", type=float, required=True)
    p_params.add_argument("--q", type=float, required=True)
    p_params.add_argument("--r", type=float)
    p_params.add_argument("--s", type=float)
    p_params.add_argument("--d", type=int)
    p_params.add_argument("--rho", type=float)
    p_params.add_argument("--dep", choices=("iid", "strong_mixing",
                                            "absolute_regularity",
                                            "causal_gamma", "lambda_weak"))
    p_params.add_argument("--decay", type=float)
    p_params.add_argument("--aux", type=float)
    p_params.add_argument("--setting", default="weighted_sum",
                          choices=("weighted_sum", "pointwise", "uniform"))
    p_params.set_defaults(func=cmd_params)

    p_run = sub.add_parser("run", help="run a rate experiment from a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=".")
    p_run.set_defaults(func=cmd_run)

    p_audit = sub.add_parser("audit", help="randomized and quadrature audits")
    p_audit.add_argument("kind", choices=("lemma2", "pisier", "kernel"))
    p_audit.add_argument("--trials", type=int, default=100_000)
    p_audit.add_argument("--seed", type=int, default=20090401)
    p_audit.add_argument("--csv")
    p_audit.add_argument("--name", default="epanechnikov")
    p_audit.add_argument("--d", type=int, default=1)
    p_audit.set_defaults(func=cmd_audit)

    p_bias = sub.add_parser("bias", help="quadrature bias sweep over h")
    p_bias.add_argument("config")
    p_bias.set_defaults(func=cmd_bias)

    p_cens = sub.add_parser("censored", help="censored covariance vs oracle")
    p_cens.add_argument("config")
    p_cens.set_defaults(func=cmd_censored)

    p_clt = sub.add_parser("clt", help="scaled norm vs the normal limit")
    p_clt.add_argument("config")
    p_clt.set_defaults(func=cmd_clt)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except _DEGENERATE_ERRORS as exc:
        print(f"degenerate experiment: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RmlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
