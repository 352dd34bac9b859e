"""Replication engine: empirical deviation norms across n, log-log rate fits.

Replications are independent work items (each owns its Philox streams), so
the engine may fan them out over a thread pool; aggregation always happens
in replication-index order with exactly rounded summation, which makes
every table bitwise reproducible no matter how many workers ran.  The
RML_THREADS environment variable caps the pool (0 or unset means auto).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .errors import (AllExcluded, DegenerateFit, EmptySample, InvalidParams,
                     InvalidSpec, TooManyExclusions)
from .kernels import make_kernel
from .nw import make_grid, mesh_for, nw_estimate, sup_deviation
from .params import (MomentParams, bandwidth_pointwise, bandwidth_uniform,
                     theoretical_exponent, thm1_exponents, validate_params)
from .processes import (ProcessSpec, SeedSpec, simulate_pairs,
                        simulate_regression)
from .ratio import ratio_hat

ESTIMATORS = ("weighted_sum", "nw_pointwise", "nw_sup")
BANDWIDTH_RULES = ("pointwise", "uniform", "fixed")
TARGETS = ("centering", "truth")

#: share of degenerate replications tolerated at any single n
MAX_EXCLUDED_FRACTION = 0.01


def default_slope_tol(estimator, dependence_kind):
    """Pilot-run tolerances on the fitted slope, per setting."""
    if estimator == "weighted_sum":
        return 0.08 if dependence_kind == "iid" else 0.10
    if estimator == "nw_pointwise":
        return 0.08
    return 0.12


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one rate experiment needs, resolved and validated."""

    process: ProcessSpec
    estimator: str
    params: MomentParams
    n_grid: tuple[int, ...]
    M: int
    master_seed: int
    x: float | None = None
    B: tuple[float, float] | None = None
    bandwidth_rule: str = "pointwise"
    bandwidth_C: float = 1.0
    bandwidth_h: float | None = None
    target: str = "centering"
    kernel_name: str = "epanechnikov"
    dim: int = 1
    rho: float | None = None
    slope_tol: float | None = None
    extra_p: tuple[float, ...] = ()

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise InvalidSpec(f"unknown estimator {self.estimator!r}")
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidSpec("n_grid must be strictly increasing with length >= 3")
        object.__setattr__(self, "n_grid", grid)
        if self.M < 1:
            raise InvalidSpec("M >= 1 required")
        if self.bandwidth_rule not in BANDWIDTH_RULES:
            raise InvalidSpec(f"unknown bandwidth rule {self.bandwidth_rule!r}")
        if self.target not in TARGETS:
            raise InvalidSpec(f"unknown target {self.target!r}")
        if self.estimator == "weighted_sum":
            if not self.process.is_pair_kind:
                raise InvalidSpec("weighted_sum needs a pair process")
        else:
            if not self.process.is_regression_kind:
                raise InvalidSpec(f"{self.estimator} needs a regression process")
            if self.bandwidth_rule == "fixed" and self.bandwidth_h is None:
                raise InvalidSpec("fixed bandwidth rule needs bandwidth_h")

    @property
    def p(self):
        return self.params.p

    def resolved_rho(self):
        if self.rho is not None:
            return self.rho
        if self.process.is_regression_kind:
            return self.process.truth["model"].rho
        return None

    def bandwidth(self, n):
        if self.bandwidth_rule == "fixed":
            return self.bandwidth_h
        rho = self.resolved_rho()
        if self.bandwidth_rule == "pointwise":
            return bandwidth_pointwise(n, rho, self.dim, self.bandwidth_C)
        return bandwidth_uniform(n, rho, self.dim, self.bandwidth_C)

    def abscissa_kind(self):
        if self.estimator == "nw_sup" and self.bandwidth_rule == "uniform":
            return "n_over_log_n"
        return "n"

    def setting(self):
        return {"weighted_sum": "weighted_sum", "nw_pointwise": "pointwise",
                "nw_sup": "uniform"}[self.estimator]

    def theoretical(self):
        return theoretical_exponent(self.setting(), self.resolved_rho(), self.dim)

    def tolerance(self):
        if self.slope_tol is not None:
            return self.slope_tol
        return default_slope_tol(self.estimator, self.process.dependence.kind)


def make_config(process, estimator, p, q, n_grid, M, master_seed, r=None,
                s=None, **kwargs) -> ExperimentConfig:
    """Build a config, deriving (r, s) from the rate-friendly defaults."""
    if r is None or s is None:
        r, s = thm1_exponents(p, q)
    params = validate_params(p, q, r, s)
    return ExperimentConfig(process=process, estimator=estimator, params=params,
                            n_grid=tuple(n_grid), M=M, master_seed=master_seed,
                            **kwargs)


@dataclass(frozen=True)
class NormRow:
    n: int
    p: float
    norm: float
    stderr: float
    excluded: int
    h: float | None


@dataclass(frozen=True)
class NormTable:
    rows: tuple[NormRow, ...]
    config: ExperimentConfig = field(repr=False)

    def primary_rows(self):
        return tuple(r for r in self.rows if r.p == self.config.p)


def empirical_lp(samples, p) -> float:
    """((1/M) sum |x_j|^p)^(1/p) with exactly rounded accumulation."""
    samples = np.ascontiguousarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySample("no samples to aggregate")
    if not p > 0:
        raise InvalidParams(f"p > 0 required, got {p}")
    mean_pow = math.fsum(np.abs(samples) ** p) / samples.size
    return mean_pow ** (1.0 / p)


def lp_stderr(samples, p) -> float:
    """Delta-method standard error of the empirical L^p norm."""
    samples = np.ascontiguousarray(samples, dtype=float)
    if samples.size < 2:
        return 0.0
    powers = np.abs(samples) ** p
    m = math.fsum(powers) / powers.size
    if m == 0.0:
        return 0.0
    se_m = float(powers.std(ddof=1)) / math.sqrt(powers.size)
    return (1.0 / p) * m ** (1.0 / p - 1.0) * se_m


def thread_count():
    """Worker count from RML_THREADS; 0 or unset means auto."""
    raw = os.environ.get("RML_THREADS", "").strip()
    if raw in ("", "0"):
        return min(8, os.cpu_count() or 1)
    count = int(raw)
    if count < 1:
        raise InvalidParams(f"RML_THREADS must be >= 0, got {raw!r}")
    return count


def _run_jobs(job, count):
    workers = thread_count()
    if workers == 1 or count == 1:
        return [job(j) for j in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so aggregation stays index-ordered
        return list(pool.map(job, range(count)))


def _resolve_target(config, n, h, kernel):
    """Per-n deviation target: scalar for pointwise kinds, array for sup."""
    if config.estimator == "weighted_sum":
        return config.process.truth["R"], None
    model = config.process.truth["model"]
    if config.estimator == "nw_pointwise":
        if config.x is None:
            raise InvalidSpec("nw_pointwise needs an evaluation point x")
        if config.target == "truth":
            return float(np.asarray(model.r(np.asarray(config.x)))), None
        return oracle.nw_centering(model, kernel, config.x, h), None
    box = config.B if config.B is not None else model.B
    grid = make_grid(box, mesh_for(h, n, config.dim))
    if config.target == "truth":
        target = np.asarray(model.r(grid.points), dtype=float)
    else:
        target = np.array([oracle.nw_centering(model, kernel, x, h)
                           for x in grid.points])
    return target, grid


def _deltas_at_n(config, n):
    """All M replication deviations at one sample size; nan marks exclusion."""
    spec = config.process
    master = config.master_seed
    if config.estimator == "weighted_sum":
        target, _ = _resolve_target(config, n, None, None)

        def job(j):
            path = simulate_pairs(spec, n, SeedSpec(master, j))
            _, _, r_hat = ratio_hat(path.u, path.v)
            return r_hat - target if r_hat is not None else math.nan

        return _run_jobs(job, config.M), None

    kernel = make_kernel(config.kernel_name, config.dim)
    h = config.bandwidth(n)
    target, grid = _resolve_target(config, n, h, kernel)
    model = spec.truth["model"]

    if config.estimator == "nw_pointwise":
        def job(j):
            path = simulate_regression(spec, n, SeedSpec(master, j))
            est = nw_estimate(config.x, path, kernel, h)
            return est.r_hat - target if not est.degenerate else math.nan
    else:
        def job(j):
            path = simulate_regression(spec, n, SeedSpec(master, j))
            try:
                sup_err, _ = sup_deviation(grid, path, kernel, h, model,
                                           target=target)
            except AllExcluded:
                return math.nan
            return sup_err

    return _run_jobs(job, config.M), h


def replicate(config: ExperimentConfig) -> NormTable:
    """Empirical deviation norms for every n in the grid.

    Raises TooManyExclusions when more than 1% of the replications at any
    n are degenerate.
    """
    rows = []
    p_values = (config.p,) + tuple(config.extra_p)
    for n in config.n_grid:
        deltas, h = _deltas_at_n(config, n)
        included = np.array([d for d in deltas if not math.isnan(d)])
        excluded = config.M - included.size
        if excluded > MAX_EXCLUDED_FRACTION * config.M:
            raise TooManyExclusions(
                f"{excluded}/{config.M} degenerate replications at n={n}")
        norms = {}
        for p in p_values:
            norms[p] = empirical_lp(included, p)
            rows.append(NormRow(n=n, p=p, norm=norms[p],
                                stderr=lp_stderr(included, p),
                                excluded=excluded, h=h))
        _assert_moment_monotonicity(norms)
    return NormTable(rows=tuple(rows), config=config)


def _assert_moment_monotonicity(norms):
    # power-mean inequality: the empirical L^p norm is nondecreasing in p
    ordered = sorted(norms.items())
    for (p1, n1), (p2, n2) in zip(ordered, ordered[1:]):
        if n1 > n2 * (1.0 + 1e-12):
            raise AssertionError(
                f"moment monotonicity violated: L^{p1}={n1!r} > L^{p2}={n2!r}")


@dataclass(frozen=True)
class RateFit:
    """OLS slope of log-norm against the log-abscissa, with its verdict."""

    abscissa: str
    rows: tuple[NormRow, ...]
    slope: float
    slope_stderr: float
    intercept: float
    residual_ss: float
    theoretical: float
    tolerance: float
    passed: bool


def fit_rate(table: NormTable, abscissa=None) -> RateFit:
    """Ordinary least squares of log norm on the log abscissa."""
    config = table.config
    abscissa = abscissa or config.abscissa_kind()
    if abscissa not in ("n", "n_over_log_n"):
        raise InvalidParams(f"unknown abscissa {abscissa!r}")
    rows = table.primary_rows()
    if len(rows) < 3:
        raise InvalidParams("need at least 3 grid points to fit a rate")
    if any(r.norm <= 0.0 for r in rows):
        raise DegenerateFit("zero norm in the table; log-log fit undefined")
    xs = np.array([r.n if abscissa == "n" else r.n / math.log(r.n)
                   for r in rows], dtype=float)
    ys = np.array([r.norm for r in rows])
    lx = np.log(xs)
    ly = np.log(ys)
    mx = lx.mean()
    my = ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    rss = float(np.sum(resid ** 2))
    dof = len(rows) - 2
    stderr = math.sqrt(rss / dof / sxx) if dof > 0 else 0.0
    theoretical = config.theoretical()
    tol = config.tolerance()
    passed = abs(slope - (-theoretical)) <= tol
    return RateFit(abscissa=abscissa, rows=rows, slope=slope,
                   slope_stderr=stderr, intercept=intercept, residual_ss=rss,
                   theoretical=theoretical, tolerance=tol, passed=passed)


@dataclass(frozen=True)
class CltResult:
    """Scaled norm at the largest n against the limiting normal norm."""

    n: int
    M: int
    p_prime: float
    lhs: float
    limit: float
    rel_gap: float
    sigma: float


def clt_check(config: ExperimentConfig, p_prime) -> CltResult:
    """Compare sqrt(n) times the empirical L^{p'} norm with the normal limit."""
    if config.process.kind != "iid_pairs":
        raise InvalidSpec("the distributional check needs an iid pair spec")
    if not 0 < p_prime < config.p:
        raise InvalidParams(f"p' must lie in (0, p), got {p_prime}")
    n = config.n_grid[-1]
    deltas, _ = _deltas_at_n(config, n)
    included = np.array([d for d in deltas if not math.isnan(d)])
    if included.size == 0:
        raise EmptySample("all replications degenerate")
    lhs = math.sqrt(n) * empirical_lp(included, p_prime)
    sigma = math.sqrt(oracle.delta_method_variance(config.process))
    limit = sigma * oracle.normal_abs_moment(p_prime) ** (1.0 / p_prime)
    rel_gap = abs(lhs - limit) / limit if limit > 0 else math.inf
    return CltResult(n=n, M=config.M, p_prime=p_prime, lhs=lhs, limit=limit,
                     rel_gap=rel_gap, sigma=sigma)


# ---------------------------------------------------------------------------
# deterministic exports
# ---------------------------------------------------------------------------

def write_norms_csv(table: NormTable, fileobj):
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["n", "p", "norm", "stderr", "excluded", "h_used"])
    for r in table.rows:
        writer.writerow([r.n, repr(float(r.p)), repr(float(r.norm)),
                         repr(float(r.stderr)), r.excluded,
                         "" if r.h is None else repr(float(r.h))])


def summary_dict(fit: RateFit, config: ExperimentConfig):
    return {
        "estimator": config.estimator,
        "abscissa": fit.abscissa,
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "theoretical": fit.theoretical,
        "tolerance": fit.tolerance,
        "pass": fit.passed,
        "per_n": [{"n": r.n, "norm": r.norm, "stderr": r.stderr,
                   "excluded": r.excluded,
                   "h": r.h} for r in fit.rows],
        "seed": config.master_seed,
        "M": config.M,
        "p": config.p,
    }


def write_summary_json(fit: RateFit, config: ExperimentConfig, fileobj):
    json.dump(summary_dict(fit, config), fileobj, indent=2, sort_keys=True)
    fileobj.write("\n")
