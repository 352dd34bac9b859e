"""Nadaraya-Watson regression, grid sup-deviations, censored covariances.

The pointwise estimator is the ratio estimate with kernel weights
U_i = h^{-d} K((X_i - x)/h) and V_i = Y_i, so it inherits the convex-hull
bound and the degenerate-denominator flagging from rml.ratio.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import accel
from .errors import AllExcluded, DegenerateDenominator, InvalidParams, InvalidSpec
from .kernels import Kernel, eval_scaled
from .ratio import ratio_hat

#: denominator floor below which the censored-covariance ratio is refused
CENSORED_DEN_FLOOR = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """Closed-form regression model: density f, regression r, regularity.

    B is the compact evaluation box (inf of f over B must be positive;
    verified numerically in the test suite, not at construction).
    f_breaks lists the discontinuity points of f so quadrature can split
    its rule there.  x_sampler draws from f; it is simulation plumbing,
    not part of the statistical contract.
    """

    name: str
    d: int
    f: Callable[[np.ndarray], np.ndarray]
    r: Callable[[np.ndarray], np.ndarray]
    rho: float
    B: tuple[float, float]
    x_sampler: Callable[[np.random.Generator, int], np.ndarray]
    uniform01_marginal: bool = False
    f_breaks: tuple[float, ...] = ()


def _sin_r(x):
    return np.sin(2.0 * np.pi * np.asarray(x, dtype=float))


def _uniform01_f(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)


def _gauss_f(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


MODELS = {
    "sin_uniform": ModelSpec(
        name="sin_uniform", d=1, f=_uniform01_f, r=_sin_r, rho=2.0,
        B=(0.2, 0.8),
        x_sampler=lambda gen, n: gen.uniform(0.0, 1.0, n),
        uniform01_marginal=True, f_breaks=(0.0, 1.0)),
    "sin_gauss": ModelSpec(
        name="sin_gauss", d=1, f=_gauss_f, r=_sin_r, rho=2.0,
        B=(-0.5, 0.5),
        x_sampler=lambda gen, n: gen.standard_normal(n)),
    # the power-of-two constant keeps the noiseless convex combination exact
    "const_uniform": ModelSpec(
        name="const_uniform", d=1, f=_uniform01_f,
        r=lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
        rho=2.0, B=(0.2, 0.8),
        x_sampler=lambda gen, n: gen.uniform(0.0, 1.0, n),
        uniform01_marginal=True, f_breaks=(0.0, 1.0)),
}


def get_model(name) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise InvalidSpec(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


@dataclass(frozen=True)
class EvalGrid:
    """Finite evaluation grid inside a compact box."""

    points: np.ndarray
    mesh: float

    def __post_init__(self):
        if not self.mesh > 0:
            raise InvalidParams(f"mesh must be positive, got {self.mesh}")
        if np.asarray(self.points).size < 1:
            raise InvalidParams("grid must contain at least one point")


def mesh_for(h, n, d=1):
    """Bandwidth-linked mesh h / sqrt(n h^d), fine enough for the supremum."""
    if not (h > 0 and n >= 1):
        raise InvalidParams("h > 0 and n >= 1 required")
    return h / math.sqrt(n * h ** d)


def make_grid(box, mesh) -> EvalGrid:
    """Regular 1-d grid covering [box[0], box[1]] with the given spacing."""
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise InvalidParams(f"box must satisfy hi > lo, got {box}")
    count = int(math.floor((hi - lo) / mesh)) + 1
    points = lo + mesh * np.arange(count)
    points = points[points <= hi + 1e-12 * max(1.0, abs(hi))]
    return EvalGrid(points=points, mesh=mesh)


@dataclass(frozen=True)
class NWEstimate:
    r_hat: float | None
    f_hat: float
    g_hat: float

    @property
    def degenerate(self):
        return self.r_hat is None


def nw_estimate(x, path, kernel: Kernel, h) -> NWEstimate:
    """Kernel regression estimate at one point, delegating to the ratio core."""
    u = eval_scaled(kernel, x, path.x, h)
    d_hat, n_hat, r_hat = ratio_hat(np.ascontiguousarray(u, dtype=float),
                                    np.ascontiguousarray(path.y, dtype=float))
    return NWEstimate(r_hat=r_hat, f_hat=d_hat, g_hat=n_hat)


def grid_estimates(path, kernel: Kernel, h, grid: EvalGrid):
    """(f_hat, g_hat) arrays over the grid; accelerated for d = 1."""
    if not h > 0:
        raise InvalidParams(f"h > 0 required, got {h}")
    xs = np.ascontiguousarray(path.x, dtype=float)
    ys = np.ascontiguousarray(path.y, dtype=float)
    pts = np.ascontiguousarray(grid.points, dtype=float)
    if kernel.d == 1 and xs.ndim == 1:
        dsum, nsum = accel.nw_grid_sums(xs, ys, pts, h, h ** kernel.d,
                                        kernel.support_radius, kernel.kern_id)
        n = xs.size
        return dsum / n, nsum / n
    f_hat = np.empty(pts.shape[0])
    g_hat = np.empty(pts.shape[0])
    for j, x in enumerate(pts):
        est = nw_estimate(x, path, kernel, h)
        f_hat[j], g_hat[j] = est.f_hat, est.g_hat
    return f_hat, g_hat


def sup_deviation(grid: EvalGrid, path, kernel: Kernel, h, model: ModelSpec,
                  target=None):
    """Max absolute deviation |r_hat(x) - target(x)| over the defined grid points.

    target defaults to the model regression function on the grid; pass an
    array to center on something else (e.g. the smoothed ratio of
    expectations).  Returns (sup_err, n_excluded).
    """
    pts = np.asarray(grid.points, dtype=float)
    if target is None:
        target = np.asarray(model.r(pts), dtype=float)
    else:
        target = np.asarray(target, dtype=float)
        if target.shape != pts.shape:
            raise InvalidParams("target array must match the grid shape")
    f_hat, g_hat = grid_estimates(path, kernel, h, grid)
    defined = f_hat > 0.0
    n_excluded = int(np.sum(~defined))
    if not np.any(defined):
        raise AllExcluded("every grid point has a zero kernel denominator")
    err = np.abs(g_hat[defined] / f_hat[defined] - target[defined])
    return float(np.max(err)), n_excluded


def write_grid_csv(path, kernel: Kernel, h, grid: EvalGrid, fileobj):
    """Export pointwise grid estimates: x, r_hat, f_hat, g_hat, excluded."""
    f_hat, g_hat = grid_estimates(path, kernel, h, grid)
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["x", "r_hat", "f_hat", "g_hat", "excluded"])
    for x, fh, gh in zip(grid.points, f_hat, g_hat):
        if fh > 0.0:
            writer.writerow([repr(float(x)), repr(gh / fh), repr(fh), repr(gh), 0])
        else:
            writer.writerow([repr(float(x)), "", repr(fh), repr(gh), 1])


def censored_cov_estimate(path, ell_max):
    """Recover the covariances of the latent series from censored observations.

    With observed censoring indicators C and products Y = C * X, each lag's
    estimate divides the empirical Y-covariance by the empirical
    C-covariance plus the squared C-mean; for independent Bernoulli
    censoring the denominator approaches the squared censoring rate.
    """
    c = np.ascontiguousarray(path.c, dtype=float)
    y = np.ascontiguousarray(path.y, dtype=float)
    n = c.size
    if int(ell_max) != ell_max or ell_max < 1:
        raise InvalidParams(f"ell_max must be an integer >= 1, got {ell_max!r}")
    if ell_max >= n / 4:
        raise InvalidParams(f"ell_max must be < n/4 (n={n}, ell_max={ell_max})")
    c_bar = accel.neumaier_sum(c) / n
    y_bar = accel.neumaier_sum(y) / n
    out = np.empty(int(ell_max))
    for ell in range(1, int(ell_max) + 1):
        gamma_y = accel.autocov(y, y_bar, ell)
        gamma_c = accel.autocov(c, c_bar, ell)
        den = gamma_c + c_bar * c_bar
        if den <= CENSORED_DEN_FLOOR:
            raise DegenerateDenominator(
                f"lag-{ell} censoring denominator {den:.3e} below floor")
        out[ell - 1] = gamma_y / den
    return out
