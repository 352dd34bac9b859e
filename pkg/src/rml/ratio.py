"""Ratio-of-sums estimator, its convex-weight form, and per-path audits.

The estimate divides two empirical means accumulated left-to-right with
compensated summation, so results are bitwise reproducible.  A zero
denominator never fails hard here: the estimate is flagged undefined and
downstream aggregation counts the exclusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import DegenerateDenominator, InvalidParams

#: relative slack tolerance granted to the deterministic audits
SLACK_TOL = 1e-12


@dataclass(frozen=True)
class RatioStats:
    """Ratio estimate with its convex weights.

    r_hat and weights are None exactly when the denominator sum is zero;
    montecarlo counts those exclusions rather than substituting a floor.
    """

    d_hat: float
    n_hat: float
    r_hat: float | None
    weights: np.ndarray | None
    n: int

    @property
    def degenerate(self):
        return self.r_hat is None


def _as_arrays(u, v):
    u = np.ascontiguousarray(u, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if u.ndim != 1 or v.ndim != 1 or u.size != v.size:
        raise InvalidParams("U and V must be 1-d sequences of equal length")
    if u.size < 1:
        raise InvalidParams("need at least one observation")
    return u, v


def ratio_hat(u, v):
    """Hot-path estimate: (d_hat, n_hat, r_hat or None), no weights built.

    Trusts the caller for U >= 0 (kernel weights are nonnegative by
    construction); use ratio_estimate for the validating variant.
    """
    su, sn = accel.ratio_sums(u, v)
    n = u.size
    d_hat = su / n
    n_hat = sn / n
    r_hat = n_hat / d_hat if su > 0.0 else None
    return d_hat, n_hat, r_hat


def ratio_estimate(u, v) -> RatioStats:
    """Estimate the ratio of means of (U_i V_i) and (U_i), with U_i >= 0.

    When the U-sum is positive the estimate is the convex combination
    sum_i w_i V_i with w_i = U_i / sum_j U_j, hence bounded by the extreme
    V values.
    """
    u, v = _as_arrays(u, v)
    if np.any(u < 0.0):
        raise InvalidParams("all U_i must be nonnegative")
    su, sn = accel.ratio_sums(u, v)
    n = u.size
    d_hat = su / n
    n_hat = sn / n
    if su > 0.0:
        return RatioStats(d_hat, n_hat, n_hat / d_hat, u / su, n)
    return RatioStats(d_hat, n_hat, None, None, n)


def deviation(stats: RatioStats, r_n) -> float:
    """Signed deviation of the estimate from a target ratio."""
    if stats.degenerate:
        raise DegenerateDenominator("ratio undefined: U-sum is zero")
    return stats.r_hat - r_n


@dataclass(frozen=True)
class Lemma2Audit:
    """One deterministic-inequality audit: lhs, three-term rhs, slack."""

    lhs: float
    rhs: float
    slack: float
    alpha_used: float
    d_hat: float
    n_hat: float


def lemma2_audit(u, v, n_center, d_center, alpha=0.5) -> Lemma2Audit:
    """Audit the three-term deviation inequality on one realization.

    lhs  = D |R_hat - N/D|
    rhs  = |N_hat - N| + |N_hat|/D |D_hat - D| + max|V_i| |D_hat - D|^(1+a) / D^a

    Requires a positive centering denominator and a positive empirical
    U-sum (the inequality's derivation divides by both); the degenerate
    case raises so callers can count skips.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParams(f"alpha must lie in (0, 1), got {alpha}")
    if not d_center > 0.0:
        raise DegenerateDenominator(f"centering denominator must be positive, got {d_center}")
    u, v = _as_arrays(u, v)
    if np.any(u < 0.0):
        raise InvalidParams("all U_i must be nonnegative")
    d_hat, n_hat, r_hat = ratio_hat(u, v)
    if r_hat is None:
        raise DegenerateDenominator("empirical U-sum is zero; audit skipped")
    lhs = d_center * abs(r_hat - n_center / d_center)
    dev = abs(d_hat - d_center)
    rhs = (abs(n_hat - n_center)
           + abs(n_hat) / d_center * dev
           + np.max(np.abs(v)) * dev ** (1.0 + alpha) / d_center ** alpha)
    return Lemma2Audit(lhs=lhs, rhs=rhs, slack=rhs - lhs, alpha_used=alpha,
                       d_hat=d_hat, n_hat=n_hat)


def pisier_check(v, e):
    """Pointwise-dominance check max_i |V_i|^e <= sum_i |V_i|^e."""
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise InvalidParams("need a nonempty 1-d sequence")
    if not e > 0:
        raise InvalidParams(f"e > 0 required, got {e}")
    powers = np.abs(v) ** e
    return float(powers.max()), float(accel.neumaier_sum(powers))


# ---------------------------------------------------------------------------
# randomized audit suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditSummary:
    trials: int
    audited: int
    excluded: int
    violations: int
    min_rel_slack: float
    worst_trial: int
    alphas: tuple[float, ...]
    rows: tuple | None = None


def lemma2_randomized_audit(trials, seed=0, alphas=(0.1, 0.5, 0.9),
                            n_max=50, keep_rows=False) -> AuditSummary:
    """Stress the deterministic inequality on randomized instances.

    Each trial draws n in {1..n_max}, an alpha from `alphas`, nonnegative
    U (uniform, exponential, or zero-inflated uniform) and light- or
    heavy-tailed V (gaussian or t with 3 degrees of freedom), plus random
    centering values with positive denominator.  Trials with a zero U-sum
    are excluded, matching the inequality's domain.
    """
    if trials < 1:
        raise InvalidParams("trials >= 1 required")
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    ns = gen.integers(1, n_max + 1, size=trials)
    alpha_idx = gen.integers(0, len(alphas), size=trials)
    u_kind = gen.integers(0, 3, size=trials)
    v_kind = gen.integers(0, 2, size=trials)
    d_centers = gen.uniform(0.05, 3.0, size=trials)
    n_centers = gen.normal(0.0, 2.0, size=trials)

    min_rel = math.inf
    worst = -1
    audited = excluded = violations = 0
    rows = [] if keep_rows else None
    for t in range(trials):
        n = int(ns[t])
        if u_kind[t] == 0:
            u = gen.uniform(0.0, 1.0, n)
        elif u_kind[t] == 1:
            u = gen.exponential(1.0, n)
        else:
            u = gen.uniform(0.0, 1.0, n) * (gen.uniform(0.0, 1.0, n) < 0.7)
        v = gen.normal(0.0, 1.0, n) if v_kind[t] == 0 else gen.standard_t(3, n)
        alpha = alphas[alpha_idx[t]]
        try:
            audit = lemma2_audit(u, v, n_centers[t], d_centers[t], alpha)
        except DegenerateDenominator:
            excluded += 1
            if rows is not None:
                rows.append((t, n, math.nan, math.nan, math.nan, alpha, 1))
            continue
        audited += 1
        rel = audit.slack / max(1.0, audit.rhs)
        if rel < min_rel:
            min_rel = rel
            worst = t
        if rel < -SLACK_TOL:
            violations += 1
        if rows is not None:
            rows.append((t, n, audit.lhs, audit.rhs, audit.slack, alpha, 0))
    return AuditSummary(trials=trials, audited=audited, excluded=excluded,
                        violations=violations, min_rel_slack=min_rel,
                        worst_trial=worst, alphas=tuple(alphas),
                        rows=tuple(rows) if rows is not None else None)


def write_audit_csv(summary: AuditSummary, fileobj):
    """Dump audit rows as CSV: seed column is the trial index."""
    import csv

    if summary.rows is None:
        raise InvalidParams("audit was run without keep_rows=True")
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["seed", "n", "lhs", "rhs", "slack", "alpha", "excluded"])
    for row in summary.rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
