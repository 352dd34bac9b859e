"""Hot numeric kernels: a numba-jitted lane and a pure-numpy fallback.

The lane is picked once at import time from the RML_BACKEND environment
variable: "numpy" forces the fallback, "numba" requires the jitted lane,
anything else (or unset) selects numba when it is importable.  Both lanes
use compensated accumulation in index order, so each is bitwise
deterministic on its own; across lanes the results agree to a couple of
ulps (the fallback sums with math.fsum, which is exactly rounded, while
the jitted lane runs a Neumaier loop).

Kernel profile ids used by the grid routine: 0 epanechnikov, 1 triangle,
2 quartic.  The closed forms here must stay in sync with rml.kernels.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["BACKEND", "HAVE_NUMBA", "get_impl", "neumaier_sum", "ratio_sums",
           "ar1_path", "nw_grid_sums", "autocov"]

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy lane
# ---------------------------------------------------------------------------

def _np_neumaier_sum(a):
    return math.fsum(a)


def _np_ratio_sums(u, v):
    return math.fsum(u), math.fsum(u * v)


def _np_ar1_path(x0, eps, a):
    from scipy.signal import lfilter

    out = np.empty(eps.size + 1)
    out[0] = x0
    if eps.size:
        # direct-form recursion y[t] = a*y[t-1] + eps[t], seeded at x0
        out[1:] = lfilter([1.0], [1.0, -a], eps, zi=np.array([a * x0]))[0]
    return out


def _np_kprofile(u, kern_id):
    au = np.abs(u)
    if kern_id == 0:
        val = 0.75 * (1.0 - u * u)
    elif kern_id == 1:
        val = 1.0 - au
    else:
        val = 0.9375 * (1.0 - u * u) ** 2
    return np.where(au <= 1.0, val, 0.0)


def _np_nw_grid_sums(xs, ys, grid, h, hd, radius, kern_id):
    m = grid.size
    dsum = np.empty(m)
    nsum = np.empty(m)
    for j in range(m):
        u = (xs - grid[j]) / h
        k = _np_kprofile(u, kern_id) / hd
        dsum[j] = math.fsum(k)
        nsum[j] = math.fsum(k * ys)
    return dsum, nsum


def _np_autocov(x, mean, ell):
    n = x.size
    if ell >= n:
        return 0.0
    d = x - mean
    return math.fsum(d[: n - ell] * d[ell:]) / n


_NUMPY_IMPLS = {
    "neumaier_sum": _np_neumaier_sum,
    "ratio_sums": _np_ratio_sums,
    "ar1_path": _np_ar1_path,
    "nw_grid_sums": _np_nw_grid_sums,
    "autocov": _np_autocov,
}


# ---------------------------------------------------------------------------
# numba lane
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_neumaier_sum(a):
        s = 0.0
        c = 0.0
        for i in range(a.size):
            x = a[i]
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
        return s + c

    @njit(cache=True, nogil=True)
    def _nb_ratio_sums(u, v):
        su = 0.0
        cu = 0.0
        sn = 0.0
        cn = 0.0
        for i in range(u.size):
            x = u[i]
            t = su + x
            if abs(su) >= abs(x):
                cu += (su - t) + x
            else:
                cu += (x - t) + su
            su = t
            y = u[i] * v[i]
            t = sn + y
            if abs(sn) >= abs(y):
                cn += (sn - t) + y
            else:
                cn += (y - t) + sn
            sn = t
        return su + cu, sn + cn

    @njit(cache=True, nogil=True)
    def _nb_ar1_path(x0, eps, a):
        out = np.empty(eps.size + 1)
        out[0] = x0
        for t in range(eps.size):
            out[t + 1] = a * out[t] + eps[t]
        return out

    @njit(cache=True, nogil=True, inline="always")
    def _nb_kprofile(u, kern_id):
        if u < -1.0 or u > 1.0:
            return 0.0
        if kern_id == 0:
            return 0.75 * (1.0 - u * u)
        if kern_id == 1:
            return 1.0 - abs(u)
        return 0.9375 * (1.0 - u * u) ** 2

    @njit(cache=True, nogil=True)
    def _nb_nw_grid_sums(xs, ys, grid, h, hd, radius, kern_id):
        m = grid.size
        dsum = np.empty(m)
        nsum = np.empty(m)
        for j in range(m):
            gx = grid[j]
            sd = 0.0
            cd = 0.0
            sn = 0.0
            cn = 0.0
            for i in range(xs.size):
                u = (xs[i] - gx) / h
                if u < -radius or u > radius:
                    continue
                k = _nb_kprofile(u, kern_id) / hd
                t = sd + k
                if abs(sd) >= abs(k):
                    cd += (sd - t) + k
                else:
                    cd += (k - t) + sd
                sd = t
                y = k * ys[i]
                t = sn + y
                if abs(sn) >= abs(y):
                    cn += (sn - t) + y
                else:
                    cn += (y - t) + sn
                sn = t
            dsum[j] = sd + cd
            nsum[j] = sn + cn
        return dsum, nsum

    @njit(cache=True, nogil=True)
    def _nb_autocov(x, mean, ell):
        n = x.size
        if ell >= n:
            return 0.0
        s = 0.0
        c = 0.0
        for i in range(n - ell):
            y = (x[i] - mean) * (x[i + ell] - mean)
            t = s + y
            if abs(s) >= abs(y):
                c += (s - t) + y
            else:
                c += (y - t) + s
            s = t
        return (s + c) / n

    _NUMBA_IMPLS = {
        "neumaier_sum": _nb_neumaier_sum,
        "ratio_sums": _nb_ratio_sums,
        "ar1_path": _nb_ar1_path,
        "nw_grid_sums": _nb_nw_grid_sums,
        "autocov": _nb_autocov,
    }
else:
    _NUMBA_IMPLS = {}


def _select_backend():
    want = os.environ.get("RML_BACKEND", "").strip().lower()
    if want == "numpy":
        return "numpy"
    if want == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("RML_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


BACKEND = _select_backend()


def get_impl(name, backend=None):
    """Return one of the accel primitives, optionally from a specific lane."""
    backend = backend or BACKEND
    table = _NUMBA_IMPLS if backend == "numba" else _NUMPY_IMPLS
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    return table[name]


neumaier_sum = get_impl("neumaier_sum")
ratio_sums = get_impl("ratio_sums")
ar1_path = get_impl("ar1_path")
nw_grid_sums = get_impl("nw_grid_sums")
autocov = get_impl("autocov")


def warm_up():
    """Trigger jit compilation of every kernel on tiny inputs."""
    one = np.array([1.0])
    neumaier_sum(one)
    ratio_sums(one, one)
    ar1_path(0.0, np.array([0.1]), 0.5)
    nw_grid_sums(one, one, np.array([0.5]), 1.0, 1.0, 1.0, 0)
    autocov(np.array([1.0, 2.0, 3.0]), 2.0, 1)
