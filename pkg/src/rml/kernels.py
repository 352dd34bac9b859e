"""Nonnegative, compactly supported, Lipschitz product kernels.

Shipped profiles (all symmetric, hence order 2): epanechnikov, triangle,
quartic.  Multivariate kernels are coordinate products, so the support is
the box [-R, R]^d.  verify_order integrates the kernel and its low-order
moments with a fixed composite Simpson rule and reports the first
nonvanishing moment, which establishes the order actually achieved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, QuadratureFailure, UnsupportedKernel

#: profile ids shared with the accel grid routine
KERNEL_IDS = {"epanechnikov": 0, "triangle": 1, "quartic": 2}

# closed forms on [-1, 1]; normalization constants make each integrate to 1
_PROFILE_MAX = {"epanechnikov": 0.75, "triangle": 1.0, "quartic": 0.9375}
# max |K'| on the support: 3/2, 1, and 15/(4*sqrt(3))*(2/3) respectively
_PROFILE_LIP = {"epanechnikov": 1.5, "triangle": 1.0,
                "quartic": 15.0 / 4.0 / math.sqrt(3.0) * (2.0 / 3.0)}


def _profile(name, u):
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    if name == "epanechnikov":
        val = 0.75 * (1.0 - u * u)
    elif name == "triangle":
        val = 1.0 - au
    else:
        val = 0.9375 * (1.0 - u * u) ** 2
    return np.where(au <= 1.0, val, 0.0)


@dataclass(frozen=True)
class Kernel:
    """A product kernel on R^d; immutable after construction."""

    name: str
    d: int
    support_radius: float
    lipschitz_const: float
    order: int

    @property
    def kern_id(self):
        return KERNEL_IDS[self.name]

    def profile(self, u):
        """One-dimensional factor evaluated elementwise."""
        return _profile(self.name, u)

    def evaluate(self, points):
        """K at points of shape (m, d), (d,) for one point, or (m,) when d = 1."""
        pts = np.asarray(points, dtype=float)
        if self.d == 1:
            return _profile(self.name, pts)
        if pts.ndim == 1:
            if pts.size != self.d:
                raise InvalidParams(f"point has dimension {pts.size}, kernel d={self.d}")
            return float(np.prod(_profile(self.name, pts)))
        if pts.shape[1] != self.d:
            raise InvalidParams(f"points have dimension {pts.shape[1]}, kernel d={self.d}")
        return np.prod(_profile(self.name, pts), axis=1)


def make_kernel(name="epanechnikov", d=1) -> Kernel:
    """Build a normalized product kernel of the given name and dimension."""
    if name not in KERNEL_IDS:
        raise UnsupportedKernel(f"unknown kernel {name!r}; choose from {sorted(KERNEL_IDS)}")
    if int(d) != d or d < 1:
        raise InvalidParams(f"d must be an integer >= 1, got {d!r}")
    lip = _PROFILE_LIP[name] * _PROFILE_MAX[name] ** (int(d) - 1)
    return Kernel(name=name, d=int(d), support_radius=1.0,
                  lipschitz_const=lip, order=2)


def eval_scaled(kernel: Kernel, x, center, h):
    """Scaled evaluation h^{-d} K((center - x) / h).

    `center` may be a single point or an array of points; the result is zero
    whenever the sup-norm distance exceeds h times the support radius.
    """
    if not h > 0:
        raise InvalidParams(f"h > 0 required, got {h}")
    u = (np.asarray(center, dtype=float) - x) / h
    return kernel.evaluate(u) / h ** kernel.d


@dataclass(frozen=True)
class OrderReport:
    """verify_order outcome: normalization, low moments, achieved order."""

    integral: float
    max_low_moment: float
    first_nonvanishing: tuple[int, ...] | None
    first_value: float
    order: int
    normalized: bool
    vanishing_ok: bool

    @property
    def ok(self):
        return self.normalized and self.vanishing_ok


def _simpson_nodes(radius, panels):
    if panels % 2:
        raise InvalidParams("Simpson rule needs an even panel count")
    nodes = np.linspace(-radius, radius, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (2.0 * radius / panels) / 3.0
    return nodes, w


def _moment_1d(kernel, power, panels):
    nodes, w = _simpson_nodes(kernel.support_radius, panels)
    return float(np.sum(w * nodes ** power * _profile(kernel.name, nodes)))


def _multi_indices(d, degree):
    if d == 1:
        yield (degree,)
        return
    for head in range(degree + 1):
        for tail in _multi_indices(d - 1, degree - head):
            yield (head,) + tail


def verify_order(kernel: Kernel, k=None, tol_norm=1e-6, tol_moment=1e-8,
                 panels=256, max_degree=6) -> OrderReport:
    """Numerically confirm normalization and the moment-vanishing order.

    Integrates with the fixed composite rule at `panels` and 2*`panels`
    per-axis resolutions; a disagreement beyond the tolerances raises
    QuadratureFailure.  The product structure lets every multi-index moment
    factor into one-dimensional moments.
    """
    if k is None:
        k = kernel.order
    if k not in (1, 2):
        raise InvalidParams(f"order k must be 1 or 2, got {k!r}")
    if not (tol_norm > 0 and tol_moment > 0):
        raise InvalidParams("tolerances must be positive")

    mom = {g: _moment_1d(kernel, g, panels) for g in range(max_degree + 1)}
    mom_fine = {g: _moment_1d(kernel, g, 2 * panels) for g in range(max_degree + 1)}
    for g in mom:
        if abs(mom[g] - mom_fine[g]) > max(tol_norm, tol_moment) / 10.0:
            raise QuadratureFailure(
                f"degree-{g} moment unstable under refinement: "
                f"{mom[g]!r} vs {mom_fine[g]!r}")

    def multi_moment(idx):
        out = 1.0
        for e in idx:
            out *= mom_fine[e]
        return out

    integral = mom_fine[0] ** kernel.d
    normalized = abs(integral - 1.0) <= tol_norm

    max_low = 0.0
    vanishing_ok = True
    for degree in range(1, k):
        for idx in _multi_indices(kernel.d, degree):
            m = multi_moment(idx)
            max_low = max(max_low, abs(m))
            if abs(m) > tol_moment:
                vanishing_ok = False

    first_idx, first_val = None, 0.0
    for degree in range(1, max_degree + 1):
        hits = [(idx, multi_moment(idx)) for idx in _multi_indices(kernel.d, degree)]
        nonzero = [(idx, m) for idx, m in hits if abs(m) > tol_moment]
        if nonzero:
            first_idx, first_val = nonzero[0]
            break
    if first_idx is None:
        raise QuadratureFailure(
            f"no nonvanishing moment up to degree {max_degree}; cannot establish order")

    return OrderReport(integral=integral, max_low_moment=max_low,
                       first_nonvanishing=first_idx, first_value=first_val,
                       order=sum(first_idx), normalized=normalized,
                       vanishing_ok=vanishing_ok)
