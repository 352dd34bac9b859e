"""Moment-order algebra for ratio-of-sums bounds.

Validates the exponent quadruple (p, q, r, s), derives the interpolation
exponents (alpha, beta), evaluates the explicit moment bound, and checks
the polynomial-decay thresholds of every dependence regime with a stated
sufficient condition.  Everything here is pure arithmetic on value
arguments and safe under concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateDenominator, InvalidParams, UnsupportedCombination

#: validity margin on derived rational-function constraints
TOL = 1e-12

SETTINGS = ("weighted_sum", "pointwise", "uniform")
DEPENDENCE_KINDS = ("iid", "strong_mixing", "absolute_regularity",
                    "causal_gamma", "lambda_weak")


def noninteger_q_lambda_min(q_prime):
    """Decay exponent needed by the non-integer moment variant, q in (2, 3).

    Recorded for documentation; the default experiments never exercise it.
    """
    if q_prime <= 2:
        raise InvalidParams("q' > 2 required")
    return 4.0 + 2.0 / q_prime


@dataclass(frozen=True)
class MomentParams:
    """Exponent quadruple with its derived (alpha, beta).

    Requires q > p, q/p - q/r >= 1 and 1/p > 1/q + 1/s; alpha and beta
    must land in (0, 1].  Violations raise InvalidParams naming the
    broken inequality.
    """

    p: float
    q: float
    r: float
    s: float
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        p, q, r, s = self.p, self.q, self.r, self.s
        for name, val in (("p", p), ("q", q), ("r", r), ("s", s)):
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise InvalidParams(f"{name} must be a positive finite real, got {val!r}")
        if not q > p:
            raise InvalidParams(f"q > p required (q={q}, p={p})")
        if q / p - q / r < 1.0 - TOL:
            raise InvalidParams(f"q/p - q/r >= 1 required (got {q / p - q / r:.6g})")
        if not 1.0 / p > 1.0 / q + 1.0 / s:
            raise InvalidParams(
                f"1/p > 1/q + 1/s required (1/p={1 / p:.6g}, "
                f"1/q+1/s={1 / q + 1 / s:.6g})")
        alpha = q * (1.0 / p - 1.0 / s - 1.0 / q)
        beta = p * r / (q * (r - p))
        if not (0.0 < alpha <= 1.0 + TOL):
            raise InvalidParams(f"alpha = q(1/p - 1/s - 1/q) must lie in (0, 1], got {alpha:.6g}")
        if not (0.0 < beta <= 1.0 + TOL):
            raise InvalidParams(f"beta = pr/(q(r - p)) must lie in (0, 1], got {beta:.6g}")
        object.__setattr__(self, "alpha", min(alpha, 1.0))
        object.__setattr__(self, "beta", min(beta, 1.0))


@dataclass(frozen=True)
class RawExponents:
    """Exponent quadruple without the (alpha, beta) feasibility gate.

    Threshold arithmetic (regularity condition, dependence checkers) is
    meaningful even when the canonical alpha falls outside (0, 1], so those
    helpers accept this relaxed container as well as MomentParams.
    """

    p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        for name, val in (("p", self.p), ("q", self.q), ("r", self.r), ("s", self.s)):
            if not (math.isfinite(val) and val > 0):
                raise InvalidParams(f"{name} must be a positive finite real, got {val!r}")
        if not self.q > self.p:
            raise InvalidParams(f"q > p required (q={self.q}, p={self.p})")


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the explicit moment bound for one sample size."""

    N_n: float
    D_n: float
    v_n: float
    C_n: float
    c_n: float
    n: int

    def __post_init__(self):
        if not self.D_n > 0:
            raise DegenerateDenominator(f"D_n > 0 required, got {self.D_n}")
        for name, val in (("v_n", self.v_n), ("C_n", self.C_n), ("c_n", self.c_n)):
            if val < 0:
                raise InvalidParams(f"{name} >= 0 required, got {val}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParams(f"n must be an integer >= 1, got {self.n!r}")


@dataclass(frozen=True)
class DependenceSpec:
    """Declared dependence class of a stationary sequence.

    decay_exponent is the polynomial decay of the relevant coefficients
    (math.inf stands for geometric or faster; ignored for iid).
    aux_exponent carries the secondary order r' where a result uses one,
    or the stretching exponent b of the exponential-decay regime.
    """

    kind: str
    decay_exponent: float = math.inf
    aux_exponent: float | None = None

    def __post_init__(self):
        if self.kind not in DEPENDENCE_KINDS:
            raise InvalidParams(f"unknown dependence kind {self.kind!r}")
        if self.kind != "iid" and not self.decay_exponent > 0:
            raise InvalidParams("decay_exponent > 0 required for non-iid kinds")


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of one sufficient-condition check (strict threshold)."""

    proposition_id: str
    threshold: float
    supplied: float
    satisfied: bool
    warnings: tuple[str, ...] = ()


def validate_params(p, q, r, s) -> MomentParams:
    """Build MomentParams, rejecting any violated hypothesis."""
    return MomentParams(float(p), float(q), float(r), float(s))


def thm1_exponents(p, q):
    """The (r, s) pair that forces beta = 1 and alpha = 2/s.

    r = pq/(q - p) and s = p(q + 2)/(q - p); with these orders the n^{-1/2}
    weighted-sum rate follows whenever numerator and denominator converge
    at that rate.
    """
    if not (p > 0 and q > p):
        raise InvalidParams(f"q > p > 0 required (p={p}, q={q})")
    r = p * q / (q - p)
    s = p * (q + 2.0) / (q - p)
    return r, s


def lemma1_bound(params: MomentParams, inputs: BoundInputs) -> float:
    """Evaluate the explicit upper bound on the p-norm of the ratio deviation.

    Returns
        (1 + |N|/D + |N|^b v^(1-b)/D + C^b v^(1-b)/D + v^a c n^(1/s)/D^a) * v / D
    with a = alpha, b = beta from `params`.  Zero iff v_n is zero.
    """
    a, b = params.alpha, params.beta
    N, D, v, C, c, n = (inputs.N_n, inputs.D_n, inputs.v_n, inputs.C_n,
                        inputs.c_n, inputs.n)
    if v == 0.0:
        return 0.0
    term = (1.0
            + abs(N) / D
            + abs(N) ** b * v ** (1.0 - b) / D
            + C ** b * v ** (1.0 - b) / D
            + v ** a * c * n ** (1.0 / params.s) / D ** a)
    return term * v / D


def regression_threshold(params, d) -> float:
    """Smallest regularity the pointwise minimax rate needs, from both branches.

    Accepts MomentParams or RawExponents.
    """
    p, q, r, s = params.p, params.q, params.r, params.s
    if d < 1 or int(d) != d:
        raise InvalidParams(f"d must be an integer >= 1, got {d!r}")
    den1 = q * r - p * q - p * r
    den2 = q * s - p * q - p * s - 2.0 * p
    if den1 <= 0:
        raise InvalidParams(f"qr - pq - pr must be positive, got {den1:.6g}")
    if den2 <= 0:
        raise InvalidParams(f"qs - pq - ps - 2p must be positive, got {den2:.6g}")
    return max(p * d * (r - 1.0) / den1, p * d / den2)


def regression_feasible(params, d, rho) -> bool:
    """True iff the supplied regularity meets the pointwise-rate requirement.

    The comparison is non-strict, exactly as the condition is printed.
    """
    if not rho > 0:
        raise InvalidParams(f"rho > 0 required, got {rho}")
    return rho >= regression_threshold(params, d)


def bandwidth_pointwise(n, rho, d, C=1.0) -> float:
    """Pointwise-minimax window width C * n^(-1/(2 rho + d))."""
    _check_bandwidth_args(n, rho, d, C, n_min=1)
    return C * float(n) ** (-1.0 / (2.0 * rho + d))


def bandwidth_uniform(n, rho, d, C=1.0) -> float:
    """Uniform-minimax window width C * (log n / n)^(1/(2 rho + d))."""
    _check_bandwidth_args(n, rho, d, C, n_min=3)
    return C * (math.log(n) / n) ** (1.0 / (2.0 * rho + d))


def _check_bandwidth_args(n, rho, d, C, n_min):
    if int(n) != n or n < n_min:
        raise InvalidParams(f"n must be an integer >= {n_min}, got {n!r}")
    if not rho > 0:
        raise InvalidParams(f"rho > 0 required, got {rho}")
    if int(d) != d or d < 1:
        raise InvalidParams(f"d must be an integer >= 1, got {d!r}")
    if not C > 0:
        raise InvalidParams(f"C > 0 required, got {C}")


def theoretical_exponent(setting, rho=None, d=None) -> float:
    """Rate exponent for a setting: 1/2 for weighted sums, rho/(2 rho + d) else.

    For the uniform setting the exponent is read against the n/log n
    abscissa (the rate fit records which abscissa it used).
    """
    if setting not in SETTINGS:
        raise InvalidParams(f"unknown setting {setting!r}")
    if setting == "weighted_sum":
        return 0.5
    if rho is None or d is None:
        raise InvalidParams(f"setting {setting!r} needs rho and d")
    if not rho > 0 or int(d) != d or d < 1:
        raise InvalidParams(f"rho > 0 and integer d >= 1 required, got rho={rho}, d={d}")
    return rho / (2.0 * rho + d)


# ---------------------------------------------------------------------------
# dependence-hypothesis checkers
# ---------------------------------------------------------------------------

def check_dependence(dep: DependenceSpec, params, setting,
                     d=1, rho=None) -> HypothesisReport:
    """Check the sufficient decay condition covering (dep.kind, setting).

    The threshold is computed verbatim from the stated formula and compared
    strictly against the supplied decay exponent; `params` may be
    MomentParams or RawExponents.  Side conditions that are not decay
    thresholds (window constraints, regularity floors, printed sign
    conflicts) are surfaced through the warnings list.
    """
    if setting not in SETTINGS:
        raise InvalidParams(f"unknown setting {setting!r}")
    p, q, r, s = params.p, params.q, params.r, params.s
    warnings: list[str] = []
    supplied = dep.decay_exponent

    if setting == "weighted_sum":
        if dep.kind == "iid":
            prop, threshold, supplied = "iid_mz", 0.0, math.inf
            warnings.append("independent case: finite ||U||_q and ||V||_{qp/(q-p)} assumed")
        elif dep.kind == "strong_mixing":
            prop = "prop1"
            rp = dep.aux_exponent
            if rp is None:
                raise InvalidParams("prop1 needs aux_exponent r' with q < r' <= s")
            if not rp > q:
                raise InvalidParams(f"prop1 needs r' > q (r'={rp}, q={q})")
            if rp > s:
                warnings.append(f"r' = {rp:g} exceeds s = {s:g}; statement assumes s >= r'")
            threshold = max(p / 2.0 * r / (r - p), q / 2.0 * rp / (rp - q))
        elif dep.kind == "causal_gamma":
            prop = "prop2"
            if not s > p:
                raise InvalidParams(f"prop2 needs s > p (s={s}, p={p})")
            threshold = max(p / 2.0 * (s - 1.0) / (s - p), q / 2.0)
            warnings.append("prop2 assumes U bounded and U, V independent sequences")
        elif dep.kind == "lambda_weak":
            prop = "prop3"
            if p != int(p) or q != int(q) or int(p) % 2 or int(q) % 2:
                warnings.append("prop3 assumes p and q are even integers")
            rp = dep.aux_exponent
            if rp is None:
                threshold = q / 2.0
                warnings.append("first condition set: U bounded and independent of V")
            else:
                if not rp > 2:
                    raise InvalidParams(f"prop3 second set needs r' > 2, got {rp}")
                if rp > s:
                    warnings.append(f"r' = {rp:g} exceeds s = {s:g}; statement assumes r' <= s")
                threshold = rp / (rp - 2.0) * q / 2.0
        else:
            raise UnsupportedCombination(
                f"no weighted-sum result for kind {dep.kind!r}")

    elif setting == "pointwise":
        if dep.kind == "iid":
            prop, threshold, supplied = "prop6", 0.0, math.inf
            if r != q:
                warnings.append(f"independent case is stated with r = q (r={r:g}, q={q:g})")
        elif dep.kind == "lambda_weak":
            prop = "prop7"
            if not s > 2 * p:
                warnings.append(f"s > 2p required (s={s:g}, 2p={2 * p:g})")
            threshold = max(
                r * (2.0 * r * (s - p) + 2.0 * p - s)
                / ((r - p) * (s - 2.0 * p) * (r - 1.0)) * (p - 1.0),
                2.0 * (d - 1.0) / d * (q - 1.0))
        elif dep.kind == "strong_mixing":
            prop = "prop8"
            even = (p == int(p) and q == int(q)
                    and int(p) % 2 == 0 and int(q) % 2 == 0)
            if even:
                threshold = r / 2.0 * (s - 2.0 * p) / (s - p) * (1.0 - 1.0 / p)
                warnings.append("second condition set (even integer moments)")
            else:
                if not r > q:
                    raise InvalidParams(f"prop8 first set needs r > q (r={r}, q={q})")
                if r <= 2 or s <= 4:
                    raise InvalidParams("prop8 first set needs r > 2 and s > 4")
                threshold = max((q - 1.0) * r / (r - q),
                                (4.0 * s * r - 2.0 * s - 4.0 * r)
                                / ((r - 2.0) * (s - 4.0)))
                ad_max = (1.0 - 2.0 / p) / (3.0 - 2.0 / r)
                warnings.append(
                    f"first condition set: window constraint a*d <= {ad_max:.6g} "
                    "for h ~ n^-a")
        else:
            raise UnsupportedCombination(
                f"no pointwise result for kind {dep.kind!r}")

    else:  # uniform
        if rho is None:
            raise InvalidParams("uniform setting needs rho")
        if dep.kind == "iid":
            prop = "prop11"
            if not s > 2 * p:
                raise InvalidParams(f"s > 2p required (s={s}, 2p={2 * p})")
            threshold = d * p / (s - 2.0 * p)
            supplied = rho
            warnings.append("threshold is the regularity floor dp/(s-2p); supplied is rho")
        elif dep.kind == "absolute_regularity":
            prop = "prop12"
            _warn_uniform_side_conditions(p, s, d, rho, warnings)
            den = rho * (s - 2.0 * p) - p * d
            if den <= 0:
                raise InvalidParams(
                    f"rho(s-2p) - pd must be positive, got {den:.6g}")
            threshold = max((s * rho + (2.0 * s - p) * d) / den,
                            1.0 + 2.0 * d / rho)
        elif dep.kind == "strong_mixing":
            prop = "prop13"
            _warn_uniform_side_conditions(p, s, d, rho, warnings)
            num = (3.0 * rho * s + 2.0 * d * s + d * rho * s
                   - 4.0 * rho * p - 3.0 * d * p - d * rho * p)
            den = d * p - rho * (s - 2.0 * p)
            if den <= 0:
                warnings.append(
                    "printed threshold denominator dp - rho(s-2p) is nonpositive "
                    "while the statement also assumes rho > dp/(s-2p); formula "
                    "applied as printed")
            threshold = max(num / den if den != 0 else math.inf,
                            2.0 * (s - 1.0) / (s - 2.0))
        elif dep.kind == "lambda_weak":
            prop = "prop14"
            _warn_uniform_side_conditions(p, s, d, rho, warnings)
            b = dep.aux_exponent
            if b is None:
                raise InvalidParams(
                    "prop14 needs aux_exponent b > 0 of the exponential decay "
                    "exp(-lambda i^b)")
            threshold, supplied = 0.0, b
            warnings.append("exponential-decay regime: any b > 0 suffices")
        else:
            raise UnsupportedCombination(
                f"no uniform result for kind {dep.kind!r}")

    satisfied = supplied > threshold
    if supplied == threshold:
        warnings.append("supplied exponent sits exactly on the strict threshold")
    return HypothesisReport(prop, threshold, supplied, satisfied, tuple(warnings))


def _warn_uniform_side_conditions(p, s, d, rho, warnings):
    if not s > 2 * p:
        warnings.append(f"s > 2p required (s={s:g}, 2p={2 * p:g})")
    elif not rho > d * p / (s - 2.0 * p):
        warnings.append(
            f"rho > dp/(s-2p) required (rho={rho:g}, floor={d * p / (s - 2 * p):.6g})")
