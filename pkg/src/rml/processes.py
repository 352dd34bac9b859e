"""Reproducible simulators for every dependence class the experiments use.

All randomness flows through counter-based Philox streams keyed by
(master_seed, replication_index) with the stream id and the path length in
the counter block, so concurrent replications never share state and a
(seed, replication) pair pins every path bit-for-bit on any platform.

Model menagerie
---------------
iid_pairs        independent (U, V) with U >= 0 drawn from simple marginals.
ar1_pairs        U = 0.5 + Phi(latent AR(1)), V = mean + independent AR(1);
                 instantaneous transforms of a Gaussian AR(1) stay strongly
                 mixing (indeed absolutely regular) at a geometric rate, so
                 the declared polynomial decay is infinite.
ma_pairs         bounded transform of a two-sided moving average for U and
                 an independent moving average for V, both with polynomially
                 decaying coefficients (1+|j|)^-theta; the declared weak-
                 dependence decay theta - 1 follows the standard linear-
                 process heredity and is stored as metadata, not re-derived.
                 No concrete model is prescribed for the causal/non-causal
                 weak dependence results, so this instance is a documented
                 modeling choice.
iid_regression   X from the model density, Y = r(X) + gaussian noise.
ar1_regression   latent Gaussian AR(1) pushed through its marginal CDF, so
                 X keeps a Uniform(0,1) marginal while staying dependent.
censored         latent AR(1) X, iid Bernoulli censoring C, observed C*X.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import accel
from .errors import InvalidSpec
from .nw import ModelSpec, get_model
from .params import DependenceSpec

_MASK64 = (1 << 64) - 1

#: two-sided moving-average truncation half-width; coefficients beyond decay
#: below (1+J)^-theta and are dropped
MA_WINDOW = 200

#: burn-in reserve for processes without a closed-form stationary start
#: (every shipped kind starts exactly stationary, so it is currently unused)
BURN_IN = 1000

PAIR_KINDS = ("iid_pairs", "ar1_pairs", "ma_pairs")
REGRESSION_KINDS = ("iid_regression", "ar1_regression")


@dataclass(frozen=True)
class SeedSpec:
    """(master_seed, replication_index) fully determines a path."""

    master_seed: int
    replication_index: int = 0

    def __post_init__(self):
        if self.replication_index < 0:
            raise InvalidSpec("replication_index must be >= 0")


def stream(seed: SeedSpec, stream_id, n) -> np.random.Generator:
    """Philox generator for one (seed, stream, length) triple.

    Distinct stream ids and lengths are separated in the 256-bit counter,
    so their draw sequences can never overlap.
    """
    key = np.array([seed.master_seed & _MASK64,
                    seed.replication_index & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, stream_id, n], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


# ---------------------------------------------------------------------------
# marginal distributions for the pair kinds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dist:
    """Closed-form marginal with exact first and second moments."""

    kind: str
    args: tuple = ()
    values: tuple = ()
    probs: tuple = ()

    def sample(self, gen, n):
        if self.kind == "const":
            return np.full(n, self.args[0])
        if self.kind == "uniform":
            return gen.uniform(self.args[0], self.args[1], n)
        if self.kind == "normal":
            return self.args[0] + self.args[1] * gen.standard_normal(n)
        if self.kind == "student_t":
            return gen.standard_t(self.args[0], n)
        if self.kind == "discrete":
            idx = gen.choice(len(self.values), size=n, p=self.probs)
            return np.asarray(self.values, dtype=float)[idx]
        raise InvalidSpec(f"unknown distribution kind {self.kind!r}")

    def mean(self):
        if self.kind == "const":
            return self.args[0]
        if self.kind == "uniform":
            return 0.5 * (self.args[0] + self.args[1])
        if self.kind == "normal":
            return self.args[0]
        if self.kind == "student_t":
            if self.args[0] <= 1:
                raise InvalidSpec("student_t mean needs df > 1")
            return 0.0
        if self.kind == "discrete":
            return float(np.dot(self.values, self.probs))
        raise InvalidSpec(f"unknown distribution kind {self.kind!r}")

    def second_moment(self):
        if self.kind == "const":
            return self.args[0] ** 2
        if self.kind == "uniform":
            a, b = self.args
            return (a * a + a * b + b * b) / 3.0
        if self.kind == "normal":
            return self.args[0] ** 2 + self.args[1] ** 2
        if self.kind == "student_t":
            df = self.args[0]
            if df <= 2:
                raise InvalidSpec("student_t second moment needs df > 2")
            return df / (df - 2.0)
        if self.kind == "discrete":
            return float(np.dot(np.square(self.values), self.probs))
        raise InvalidSpec(f"unknown distribution kind {self.kind!r}")

    def var(self):
        return self.second_moment() - self.mean() ** 2

    def is_nonnegative(self):
        if self.kind == "const":
            return self.args[0] >= 0
        if self.kind == "uniform":
            return self.args[0] >= 0
        if self.kind == "discrete":
            return min(self.values) >= 0
        return False

    def is_finite_support(self):
        return self.kind in ("const", "discrete")


def parse_dist(text) -> Dist:
    """Parse the config mini-syntax, e.g. "normal:0,1" or "discrete:0@0.5,2@0.5"."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "const":
        return Dist("const", (float(rest),))
    if kind in ("uniform", "normal"):
        a, b = (float(x) for x in rest.split(","))
        if kind == "uniform" and not b > a:
            raise InvalidSpec(f"uniform needs b > a, got {text!r}")
        if kind == "normal" and not b >= 0:
            raise InvalidSpec(f"normal needs sd >= 0, got {text!r}")
        return Dist(kind, (a, b))
    if kind == "student_t":
        return Dist("student_t", (float(rest),))
    if kind == "discrete":
        values, probs = [], []
        for item in rest.split(","):
            val, _, prob = item.partition("@")
            values.append(float(val))
            probs.append(float(prob))
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-9 or min(probs) < 0:
            raise InvalidSpec(f"discrete probabilities must be >= 0 and sum to 1: {text!r}")
        return Dist("discrete", (), tuple(values), tuple(probs))
    raise InvalidSpec(f"cannot parse distribution {text!r}")


# ---------------------------------------------------------------------------
# specs and sample paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProcessSpec:
    """Process kind, its parameters, dependence metadata, known truth."""

    kind: str
    params: dict
    dependence: DependenceSpec
    truth: dict = field(repr=False)

    @property
    def is_pair_kind(self):
        return self.kind in PAIR_KINDS

    @property
    def is_regression_kind(self):
        return self.kind in REGRESSION_KINDS


@dataclass(frozen=True)
class SamplePath:
    """One finite stationary realization and the spec that produced it."""

    u: np.ndarray
    v: np.ndarray
    spec: ProcessSpec
    seed: SeedSpec
    x_internal: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.u.size

    # aliases for the regression and censored layouts
    @property
    def x(self):
        return self.u

    @property
    def y(self):
        return self.v

    @property
    def c(self):
        return self.u


def iid_pairs(u="uniform:0.5,1.5", v="normal:0,1") -> ProcessSpec:
    """Independent pairs with U and V drawn independently of each other."""
    u_dist = u if isinstance(u, Dist) else parse_dist(u)
    v_dist = v if isinstance(v, Dist) else parse_dist(v)
    if not u_dist.is_nonnegative():
        raise InvalidSpec("U marginal must be nonnegative")
    truth = {"R": v_dist.mean(), "u_dist": u_dist, "v_dist": v_dist}
    return ProcessSpec("iid_pairs", {"u": u_dist, "v": v_dist},
                       DependenceSpec("iid"), truth)


def ar1_pairs(a=0.5, v_mean=0.0) -> ProcessSpec:
    """Dependent pairs built on two independent Gaussian AR(1) drivers."""
    if not -1.0 < a < 1.0:
        raise InvalidSpec(f"AR coefficient must satisfy |a| < 1, got {a}")
    truth = {"R": float(v_mean), "E_U": 1.0}
    return ProcessSpec("ar1_pairs", {"a": float(a), "v_mean": float(v_mean)},
                       DependenceSpec("strong_mixing", math.inf), truth)


def ma_pairs(theta=8.0, v_mean=0.0) -> ProcessSpec:
    """Weakly dependent pairs from truncated two-sided moving averages."""
    if not theta > 1.0:
        raise InvalidSpec(f"theta > 1 required for a declared decay, got {theta}")
    truth = {"R": float(v_mean), "E_U": 1.0}
    return ProcessSpec("ma_pairs", {"theta": float(theta), "v_mean": float(v_mean)},
                       DependenceSpec("lambda_weak", theta - 1.0), truth)


def iid_regression(model="sin_uniform", noise_sd=0.3) -> ProcessSpec:
    model_spec = model if isinstance(model, ModelSpec) else get_model(model)
    if not noise_sd >= 0:
        raise InvalidSpec("noise_sd must be >= 0")
    truth = {"model": model_spec, "noise_sd": float(noise_sd)}
    return ProcessSpec("iid_regression",
                       {"model": model_spec.name, "noise_sd": float(noise_sd)},
                       DependenceSpec("iid"), truth)


def ar1_regression(model="sin_uniform", a=0.5, noise_sd=0.3) -> ProcessSpec:
    model_spec = model if isinstance(model, ModelSpec) else get_model(model)
    if not model_spec.uniform01_marginal:
        raise InvalidSpec("ar1_regression needs a model with a Uniform(0,1) X marginal")
    if not -1.0 < a < 1.0:
        raise InvalidSpec(f"AR coefficient must satisfy |a| < 1, got {a}")
    if not noise_sd >= 0:
        raise InvalidSpec("noise_sd must be >= 0")
    truth = {"model": model_spec, "noise_sd": float(noise_sd)}
    return ProcessSpec("ar1_regression",
                       {"model": model_spec.name, "a": float(a),
                        "noise_sd": float(noise_sd)},
                       DependenceSpec("absolute_regularity", math.inf), truth)


def censored(a=0.5, sigma=1.0, pi=0.6) -> ProcessSpec:
    """Latent Gaussian AR(1) observed through iid Bernoulli censoring."""
    if not -1.0 < a < 1.0:
        raise InvalidSpec(f"AR coefficient must satisfy |a| < 1, got {a}")
    if not 0.0 < pi <= 1.0:
        raise InvalidSpec(f"censoring probability must lie in (0, 1], got {pi}")
    if not sigma > 0:
        raise InvalidSpec("sigma > 0 required")
    gamma0 = sigma * sigma / (1.0 - a * a)

    def gamma_x(ell):
        return gamma0 * a ** np.asarray(ell, dtype=float)

    truth = {"gamma_X": gamma_x, "pi": float(pi), "a": float(a),
             "sigma": float(sigma)}
    return ProcessSpec("censored",
                       {"a": float(a), "sigma": float(sigma), "pi": float(pi)},
                       DependenceSpec("absolute_regularity", math.inf), truth)


# ---------------------------------------------------------------------------
# simulators
# ---------------------------------------------------------------------------

def _ar1(gen, a, sigma, n):
    """Exactly stationary Gaussian AR(1): start at the stationary law."""
    sd_stat = sigma / math.sqrt(1.0 - a * a)
    x0 = sd_stat * gen.standard_normal()
    eps = sigma * gen.standard_normal(n - 1) if n > 1 else np.empty(0)
    return accel.ar1_path(x0, eps, a), sd_stat


def _ma_coeffs(theta):
    j = np.arange(-MA_WINDOW, MA_WINDOW + 1)
    c = (1.0 + np.abs(j)) ** (-theta)
    return c / math.sqrt(np.dot(c, c))


def _ma(gen, theta, n):
    """Unit-variance stationary two-sided moving average."""
    c = _ma_coeffs(theta)
    eps = gen.standard_normal(n + 2 * MA_WINDOW)
    return np.convolve(eps, c, mode="valid")


def simulate_pairs(spec: ProcessSpec, n, seed: SeedSpec) -> SamplePath:
    """Stationary (U_i, V_i) path with U_i >= 0."""
    if not spec.is_pair_kind:
        raise InvalidSpec(f"{spec.kind!r} is not a pair kind")
    if n < 1:
        raise InvalidSpec("n >= 1 required")
    gen_u = stream(seed, 0, n)
    gen_v = stream(seed, 1, n)
    if spec.kind == "iid_pairs":
        u = spec.params["u"].sample(gen_u, n)
        v = spec.params["v"].sample(gen_v, n)
    elif spec.kind == "ar1_pairs":
        a = spec.params["a"]
        xi, sd = _ar1(gen_u, a, 1.0, n)
        u = 0.5 + ndtr(xi / sd)
        eta, _ = _ar1(gen_v, a, 1.0, n)
        v = spec.params["v_mean"] + eta
    else:
        theta = spec.params["theta"]
        u = 0.5 + ndtr(_ma(gen_u, theta, n))
        v = spec.params["v_mean"] + _ma(gen_v, theta, n)
    return SamplePath(u=u, v=v, spec=spec, seed=seed)


def simulate_regression(spec: ProcessSpec, n, seed: SeedSpec) -> SamplePath:
    """Stationary (X_i, Y_i) path with Y_i = r(X_i) + noise."""
    if not spec.is_regression_kind:
        raise InvalidSpec(f"{spec.kind!r} is not a regression kind")
    if n < 1:
        raise InvalidSpec("n >= 1 required")
    model = spec.truth["model"]
    gen_x = stream(seed, 0, n)
    gen_noise = stream(seed, 1, n)
    if spec.kind == "iid_regression":
        x = model.x_sampler(gen_x, n)
    else:
        xi, sd = _ar1(gen_x, spec.params["a"], 1.0, n)
        x = ndtr(xi / sd)
    y = np.asarray(model.r(x), dtype=float)
    noise_sd = spec.truth["noise_sd"]
    if noise_sd > 0:
        y = y + noise_sd * gen_noise.standard_normal(n)
    return SamplePath(u=x, v=y, spec=spec, seed=seed)


def simulate_censored(spec: ProcessSpec, n, seed: SeedSpec) -> SamplePath:
    """Observed (C_i, Y_i = C_i X_i); the latent X is kept for oracle checks."""
    if spec.kind != "censored":
        raise InvalidSpec(f"{spec.kind!r} is not the censored kind")
    if n < 1:
        raise InvalidSpec("n >= 1 required")
    gen_x = stream(seed, 0, n)
    gen_c = stream(seed, 1, n)
    x, _ = _ar1(gen_x, spec.params["a"], spec.params["sigma"], n)
    c = (gen_c.random(n) < spec.params["pi"]).astype(float)
    return SamplePath(u=c, v=c * x, spec=spec, seed=seed, x_internal=x)


def simulate(spec: ProcessSpec, n, seed: SeedSpec) -> SamplePath:
    """Dispatch on the spec kind."""
    if spec.is_pair_kind:
        return simulate_pairs(spec, n, seed)
    if spec.is_regression_kind:
        return simulate_regression(spec, n, seed)
    return simulate_censored(spec, n, seed)


def write_path_csv(path: SamplePath, fileobj):
    """Export a path as CSV with kind-appropriate column names."""
    if path.spec.is_pair_kind:
        header = ["index", "U", "V"]
    elif path.spec.is_regression_kind:
        header = ["index", "X", "Y"]
    else:
        header = ["index", "C", "Y"]
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(header)
    for i, (a, b) in enumerate(zip(path.u, path.v)):
        writer.writerow([i, repr(float(a)), repr(float(b))])
