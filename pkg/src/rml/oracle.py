"""Independent ground truth for the estimators.

Quadrature here shares no sample-summation code with the estimator
modules: expected kernel quantities come from tensor-product Simpson
rules over the kernel support, asymptotic variances from closed-form
moment algebra, and small discrete instances from exact enumeration.
Agreement between these references and the Monte Carlo side is evidence,
not tautology.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDenominator, InvalidParams, InvalidSpec,
                     QuadratureFailure, StateSpaceTooLarge)
from .kernels import Kernel

#: hard cap on the number of enumerated outcomes
MAX_STATES = 4_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    """Per-axis panel count and the two-resolution agreement tolerance."""

    nodes: int = 256
    tol: float = 1e-8

    def __post_init__(self):
        if self.nodes < 64 or self.nodes % 2:
            raise InvalidParams("nodes must be an even integer >= 64")
        if not self.tol > 0:
            raise InvalidParams("tol must be positive")


DEFAULT_QUAD = QuadratureSpec()


def _simpson_interval(lo, hi, panels):
    nodes = np.linspace(lo, hi, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= ((hi - lo) / panels) / 3.0
    return nodes, w


#: inward nudge applied at density discontinuities so no quadrature node
#: evaluates on the jump itself; the skipped sliver is far below tolerance
_CUT_EPS = 1e-12


def _segments(kernel, x, h, breaks):
    """Split the u-domain [-R, R] at the images of f's discontinuities."""
    R = kernel.support_radius
    cuts = sorted({(b - x) / h for b in breaks if -R < (b - x) / h < R})
    edges = [-R]
    for c in cuts:
        edges.extend([c - _CUT_EPS, c + _CUT_EPS])
    edges.append(R)
    return [(lo, hi) for lo, hi in zip(edges[::2], edges[1::2])]


def _smoothed_integral(fun, kernel: Kernel, x, h, panels, breaks):
    """integral of fun(x + h u) K(u) du over the kernel support box."""
    R = kernel.support_radius
    if kernel.d == 1:
        total = 0.0
        for lo, hi in _segments(kernel, x, h, breaks):
            # keep each segment's rule proportional to its length, and even
            seg_panels = max(16, 2 * int(round(panels * (hi - lo) / (4.0 * R))))
            nodes, w = _simpson_interval(lo, hi, seg_panels)
            total += float(np.sum(w * fun(x + h * nodes) * kernel.profile(nodes)))
        return total
    if kernel.d == 2:
        nodes, w = _simpson_interval(-R, R, panels)
        u1, u2 = np.meshgrid(nodes, nodes, indexing="ij")
        pts = np.column_stack([u1.ravel(), u2.ravel()])
        vals = fun(np.asarray(x, dtype=float) + h * pts) * kernel.evaluate(pts)
        return float(np.sum((w[:, None] * w[None, :]).ravel() * vals))
    raise InvalidParams("quadrature supports d <= 2")


def _refined(fun, kernel, x, h, quad, breaks):
    coarse = _smoothed_integral(fun, kernel, x, h, quad.nodes, breaks)
    fine = _smoothed_integral(fun, kernel, x, h, 2 * quad.nodes, breaks)
    if abs(coarse - fine) > quad.tol:
        raise QuadratureFailure(
            f"quadrature unstable: {coarse!r} vs {fine!r} at {quad.nodes} panels")
    return fine


def _breaks(model):
    return getattr(model, "f_breaks", ())


def expected_fhat(model, kernel: Kernel, x, h, quad=DEFAULT_QUAD) -> float:
    """Smoothed density (f convolved with the scaled kernel) at x."""
    if not h > 0:
        raise InvalidParams(f"h > 0 required, got {h}")
    return _refined(model.f, kernel, x, h, quad, _breaks(model))


def expected_ghat(model, kernel: Kernel, x, h, quad=DEFAULT_QUAD) -> float:
    """Smoothed r*f at x; converges to r(x) f(x) as h shrinks."""
    if not h > 0:
        raise InvalidParams(f"h > 0 required, got {h}")

    def integrand(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(model.r(t), dtype=float) * np.asarray(model.f(t), dtype=float)

    return _refined(integrand, kernel, x, h, quad, _breaks(model))


def nw_centering(model, kernel: Kernel, x, h, quad=DEFAULT_QUAD) -> float:
    """Ratio of smoothed expectations, the deterministic regression target."""
    fh = expected_fhat(model, kernel, x, h, quad)
    if fh <= 0:
        raise DegenerateDenominator(f"smoothed density {fh!r} is not positive at {x!r}")
    return expected_ghat(model, kernel, x, h, quad) / fh


def bias_at(model, kernel: Kernel, x, h, quad=DEFAULT_QUAD) -> float:
    """|r(x) - smoothed ratio|; decays like h^rho under the regularity."""
    rx = float(np.asarray(model.r(np.asarray(x, dtype=float))))
    return abs(rx - nw_centering(model, kernel, x, h, quad))


def normal_abs_moment(a) -> float:
    """E|Z|^a for standard normal Z."""
    if not a > 0:
        raise InvalidParams(f"a > 0 required, got {a}")
    return 2.0 ** (a / 2.0) * math.gamma((a + 1.0) / 2.0) / math.sqrt(math.pi)


def delta_method_variance(spec) -> float:
    """Asymptotic variance of sqrt(n) times the ratio deviation, iid pairs.

    sigma^2 = Var(U V - R U) / (E U)^2; with U independent of V this is
    E[U^2] Var(V) / (E U)^2.
    """
    if spec.kind != "iid_pairs":
        raise InvalidSpec("delta-method oracle covers iid pair specs only")
    u, v = spec.params["u"], spec.params["v"]
    eu = u.mean()
    if eu <= 0:
        raise DegenerateDenominator("E U must be positive")
    return u.second_moment() * v.var() / (eu * eu)


@dataclass(frozen=True)
class BruteForceMoment:
    """Exact conditional moment E[|Delta|^p | sum U > 0] plus exclusion mass."""

    value: float
    excluded_prob: float
    n_states: int


def brute_force_moment(spec, n, p) -> BruteForceMoment:
    """Enumerate the full discrete product space for a small iid pair spec.

    Outcomes with a zero U-sum are excluded from the moment and their total
    probability reported, matching the Monte Carlo side's exclusion rule.
    """
    if spec.kind != "iid_pairs":
        raise InvalidSpec("enumeration covers iid pair specs only")
    u, v = spec.params["u"], spec.params["v"]
    if not (u.is_finite_support() and v.is_finite_support()):
        raise InvalidSpec("enumeration needs finitely supported marginals")
    if int(n) != n or not 1 <= n <= 12:
        raise InvalidParams(f"n must be an integer in 1..12, got {n!r}")
    if not p > 0:
        raise InvalidParams(f"p > 0 required, got {p}")

    def support(dist):
        if dist.kind == "const":
            return [(dist.args[0], 1.0)]
        return list(zip(dist.values, dist.probs))

    joint = [(uu, vv, pu * pv)
             for uu, pu in support(u) for vv, pv in support(v)]
    n_states = len(joint) ** n
    if n_states > MAX_STATES:
        raise StateSpaceTooLarge(
            f"{n_states} outcomes exceed the {MAX_STATES} cap")

    r_n = spec.truth["R"]
    total = 0.0
    included_mass = 0.0
    excluded = 0.0
    for combo in itertools.product(joint, repeat=int(n)):
        prob = 1.0
        su = 0.0
        sn = 0.0
        for uu, vv, pr in combo:
            prob *= pr
            su += uu
            sn += uu * vv
        if su <= 0.0:
            excluded += prob
            continue
        delta = sn / su - r_n
        total += prob * abs(delta) ** p
        included_mass += prob
    if included_mass <= 0:
        raise DegenerateDenominator("every outcome has a zero U-sum")
    return BruteForceMoment(value=total / included_mass,
                            excluded_prob=excluded, n_states=n_states)
