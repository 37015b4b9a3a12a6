"""Characteristic-flow kernels: RK4 with near-axis sub-stepping and
crossing-time bisection for the force jump of the theta = 0 line potential.

Two implementations of the same algorithm are kept in step:

* ``_advance_numba``: per-particle loops compiled with numba (parallel over
  particles);
* ``_advance_numpy``: vectorized over particles, used when numba is disabled
  through ``WLAB_DISABLE_NUMBA``.

Per macro step of size dt a particle with |x1| < R_GUARD takes
GUARD_SUBSTEPS sub-steps, otherwise one.  When the line potential is kinked
and a (sub-)step changes the sign of x1, the crossing time is bisected to
CROSSING_TOL and the step restarted from there.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit, prange
from .constants import CROSSING_TOL, GUARD_SUBSTEPS, R_GUARD, TWO_PI

VARIANT_CODES = {"line": 0, "point": 1, "smooth": 2, "free": 3}


def kernel_params(V):
    """Pack a PotentialField into the flat argument tuple of the compiled kernels."""
    table, slope, total = V.cutoff.tables()
    return (float(V.theta), VARIANT_CODES[V.variant], int(V.space_dims),
            int(V.cutoff.code), np.ascontiguousarray(table, dtype=np.float64),
            np.ascontiguousarray(slope, dtype=np.float64), float(total),
            bool(V.kinked))


# ---------------------------------------------------------------------------
# scalar building blocks (compiled)

@njit(cache=True)
def _psi(s, code, table, slope, total):
    if s <= 0.5:
        return 1.0
    if s >= 1.0:
        return 0.0
    if code == 1:
        a = math.exp(-1.0 / (1.0 - s))
        b = math.exp(-1.0 / (s - 0.5))
        return a / (a + b)
    n = table.shape[0] - 1
    h = 2.0 / n
    u = 4.0 * s - 3.0
    t = (u + 1.0) / h
    j = int(math.floor(t))
    if j > n - 1:
        j = n - 1
    r = t - j
    r2 = r * r
    r3 = r2 * r
    m0 = slope[j] * h
    m1 = slope[j + 1] * h
    cdf = ((2 * r3 - 3 * r2 + 1) * table[j] + (r3 - 2 * r2 + r) * m0
           + (-2 * r3 + 3 * r2) * table[j + 1] + (r3 - r2) * m1)
    return 1.0 - cdf


@njit(cache=True)
def _dpsi(s, code, total):
    if s <= 0.5 or s >= 1.0:
        return 0.0
    if code == 1:
        t1 = 1.0 - s
        t2 = s - 0.5
        a = math.exp(-1.0 / t1)
        b = math.exp(-1.0 / t2)
        da = -a / (t1 * t1)
        db = b / (t2 * t2)
        return (da * b - a * db) / ((a + b) * (a + b))
    u = 4.0 * s - 3.0
    return -4.0 * math.exp(-1.0 / (1.0 - u * u)) / total


@njit(cache=True)
def _sign(v):
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def _grad(x1, x2, theta, variant, dims, code, table, slope, total):
    """grad V at one point; x2 is ignored when dims == 1."""
    if variant == 3:
        return 0.0, 0.0
    a1 = abs(x1)
    s1 = _sign(x1)
    c1 = _psi(a1, code, table, slope, total)
    dc1 = _dpsi(a1, code, total) * s1
    if dims == 2:
        a2 = abs(x2)
        c2 = _psi(a2, code, table, slope, total)
        dc2 = _dpsi(a2, code, total) * _sign(x2)
    else:
        c2 = 1.0
        dc2 = 0.0
    if variant == 2:
        return dc1 * c2, c1 * dc2
    if variant == 1 and dims == 2:
        r = math.sqrt(x1 * x1 + x2 * x2)
        radial = 1.0 - r ** (1.0 + theta)
        if r > 0.0:
            dr = -(1.0 + theta) * r ** (theta - 1.0)
        else:
            dr = 0.0
        g1 = dr * x1 * c1 * c2 + radial * dc1 * c2
        g2 = dr * x2 * c1 * c2 + radial * c1 * dc2
        if x1 == 0.0:
            g1 = 0.0
        return g1, g2
    p = 1.0 - a1 ** (1.0 + theta)
    dp = -(1.0 + theta) * a1 ** theta * s1
    return (dp * c1 + p * dc1) * c2, p * c1 * dc2


@njit(cache=True)
def _rk4(x1, x2, k1, k2, h, theta, variant, dims, code, table, slope, total):
    inv = 1.0 / TWO_PI
    f1, f2 = _grad(x1, x2, theta, variant, dims, code, table, slope, total)
    ax1, ax2, ak1, ak2 = TWO_PI * k1, TWO_PI * k2, -inv * f1, -inv * f2
    y1, y2, q1, q2 = x1 + 0.5 * h * ax1, x2 + 0.5 * h * ax2, k1 + 0.5 * h * ak1, k2 + 0.5 * h * ak2
    f1, f2 = _grad(y1, y2, theta, variant, dims, code, table, slope, total)
    bx1, bx2, bk1, bk2 = TWO_PI * q1, TWO_PI * q2, -inv * f1, -inv * f2
    y1, y2, q1, q2 = x1 + 0.5 * h * bx1, x2 + 0.5 * h * bx2, k1 + 0.5 * h * bk1, k2 + 0.5 * h * bk2
    f1, f2 = _grad(y1, y2, theta, variant, dims, code, table, slope, total)
    cx1, cx2, ck1, ck2 = TWO_PI * q1, TWO_PI * q2, -inv * f1, -inv * f2
    y1, y2, q1, q2 = x1 + h * cx1, x2 + h * cx2, k1 + h * ck1, k2 + h * ck2
    f1, f2 = _grad(y1, y2, theta, variant, dims, code, table, slope, total)
    dx1, dx2, dk1, dk2 = TWO_PI * q1, TWO_PI * q2, -inv * f1, -inv * f2
    w = h / 6.0
    return (x1 + w * (ax1 + 2 * bx1 + 2 * cx1 + dx1),
            x2 + w * (ax2 + 2 * bx2 + 2 * cx2 + dx2),
            k1 + w * (ak1 + 2 * bk1 + 2 * ck1 + dk1),
            k2 + w * (ak2 + 2 * bk2 + 2 * ck2 + dk2))


@njit(cache=True)
def _substep(x1, x2, k1, k2, h, theta, variant, dims, code, table, slope, total, kinked):
    n1, n2, m1, m2 = _rk4(x1, x2, k1, k2, h, theta, variant, dims, code, table, slope, total)
    if kinked and x1 != 0.0 and x1 * n1 < 0.0:
        lo = 0.0
        hi = h
        while hi - lo > CROSSING_TOL:
            mid = 0.5 * (lo + hi)
            t1, t2, t3, t4 = _rk4(x1, x2, k1, k2, mid, theta, variant, dims, code,
                                  table, slope, total)
            if t1 * x1 > 0.0:
                lo = mid
            else:
                hi = mid
        y1, y2, q1, q2 = _rk4(x1, x2, k1, k2, hi, theta, variant, dims, code,
                              table, slope, total)
        n1, n2, m1, m2 = _rk4(y1, y2, q1, q2, h - hi, theta, variant, dims, code,
                              table, slope, total)
    return n1, n2, m1, m2


@njit(cache=True, parallel=True)
def _advance_numba(x, k, dt, n_steps, theta, variant, dims, code, table, slope,
                   total, kinked):
    n = x.shape[0]
    for i in prange(n):
        x1 = x[i, 0]
        k1 = k[i, 0]
        if dims == 2:
            x2 = x[i, 1]
            k2 = k[i, 1]
        else:
            x2 = 0.0
            k2 = 0.0
        for _ in range(n_steps):
            nsub = GUARD_SUBSTEPS if abs(x1) < R_GUARD else 1
            h = dt / nsub
            for _s in range(nsub):
                x1, x2, k1, k2 = _substep(x1, x2, k1, k2, h, theta, variant, dims,
                                          code, table, slope, total, kinked)
        x[i, 0] = x1
        k[i, 0] = k1
        if dims == 2:
            x[i, 1] = x2
            k[i, 1] = k2


# ---------------------------------------------------------------------------
# vectorized fallback

def _rk4_vec(V, x, k, h):
    """One RK4 step for arrays x, k of shape (P, d); h scalar or (P,)."""
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    inv = 1.0 / TWO_PI
    ax, ak = TWO_PI * k, -inv * V.gradient(x)
    y, q = x + 0.5 * h * ax, k + 0.5 * h * ak
    bx, bk = TWO_PI * q, -inv * V.gradient(y)
    y, q = x + 0.5 * h * bx, k + 0.5 * h * bk
    cx, ck = TWO_PI * q, -inv * V.gradient(y)
    y, q = x + h * cx, k + h * ck
    dx, dk = TWO_PI * q, -inv * V.gradient(y)
    w = h / 6.0
    return (x + w * (ax + 2 * bx + 2 * cx + dx),
            k + w * (ak + 2 * bk + 2 * ck + dk))


def _substep_vec(V, x, k, h):
    nx, nk = _rk4_vec(V, x, k, h)
    if V.kinked:
        cross = (x[:, 0] != 0.0) & (x[:, 0] * nx[:, 0] < 0.0)
        if np.any(cross):
            xc, kc = x[cross], k[cross]
            lo = np.zeros(xc.shape[0])
            hi = np.full(xc.shape[0], h)
            active = hi - lo > CROSSING_TOL
            while np.any(active):
                mid = 0.5 * (lo + hi)
                tx, _ = _rk4_vec(V, xc, kc, mid)
                same = tx[:, 0] * xc[:, 0] > 0.0
                lo = np.where(active & same, mid, lo)
                hi = np.where(active & ~same, mid, hi)
                active = hi - lo > CROSSING_TOL
            yx, yk = _rk4_vec(V, xc, kc, hi)
            cx, ck = _rk4_vec(V, yx, yk, h - hi)
            nx[cross], nk[cross] = cx, ck
    return nx, nk


def _advance_numpy(V, x, k, dt, n_steps):
    for _ in range(n_steps):
        guard = np.abs(x[:, 0]) < R_GUARD
        if np.any(~guard):
            free = ~guard
            x[free], k[free] = _substep_vec(V, x[free], k[free], dt)
        if np.any(guard):
            xg, kg = x[guard], k[guard]
            h = dt / GUARD_SUBSTEPS
            for _s in range(GUARD_SUBSTEPS):
                xg, kg = _substep_vec(V, xg, kg, h)
            x[guard], k[guard] = xg, kg


def advance(V, x, k, dt, n_steps=1):
    """Advance particle arrays in place by ``n_steps`` macro steps of size ``dt``.

    ``x`` and ``k`` have shape (P, space_dims) and dtype float64.
    """
    if n_steps <= 0 or x.shape[0] == 0:
        return x, k
    if _accel.USE_NUMBA:
        _advance_numba(x, k, float(dt), int(n_steps), *kernel_params(V))
    else:
        _advance_numpy(V, x, k, float(dt), int(n_steps))
    return x, k
