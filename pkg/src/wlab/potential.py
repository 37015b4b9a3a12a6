"""Cutoff profiles and the singular potential on R^2 (or its x2 = 0 slice).

The potential variants are

* ``line``   V = (1 - |x1|^(1+theta)) psi(|x1|) psi(|x2|)
* ``point``  V = (1 - |x|^(1+theta))  psi(|x1|) psi(|x2|)
* ``smooth`` V = psi(|x1|) psi(|x2|)           (singular factor removed)
* ``free``   V = 0

With ``space_dims=1`` every variant is restricted to the line x2 = 0, where
psi(|x2|) = 1.
"""
from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import UnboundedDerivative

VARIANTS = ("line", "point", "smooth", "free")

# sampling step for derivative sups outside the plateaus, and its safety factor
SUP_STEP = 1e-3
SUP_SAFETY = 1.1


def _bump(u):
    """exp(-1/(1-u^2)) on (-1, 1), zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


def _bump_d1(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    q = 1.0 / (1.0 - ui * ui)
    out[inside] = -2.0 * ui * q * q * np.exp(-q)
    return out


def _bump_d2(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    q = 1.0 / (1.0 - ui * ui)
    u2 = ui * ui
    out[inside] = -2.0 * np.exp(-q) * (q * q + 4.0 * u2 * q ** 3 - 2.0 * u2 * q ** 4)
    return out


class BumpIntegralCutoff:
    """psi(s) = 1 - int_0^s b / int_0^inf b, with b the standard bump moved to [1/2, 1].

    b(tau) = exp(-1/(1-u^2)), u = 4 tau - 3.  The running integral is
    tabulated once with composite Gauss-Legendre and interpolated by cubic
    Hermite polynomials whose slopes are the exact bump values; the
    derivatives psi', psi'', psi''' are evaluated in closed form.
    """

    name = "bump-integral"
    code = 0
    n_table = 4096

    def __init__(self):
        m = self.n_table
        u = np.linspace(-1.0, 1.0, m + 1)
        gx, gw = leggauss(12)
        h = u[1] - u[0]
        mids = 0.5 * (u[:-1] + u[1:])
        pts = mids[:, None] + 0.5 * h * gx[None, :]
        cells = 0.5 * h * (_bump(pts) * gw[None, :]).sum(axis=1)
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        self.u_nodes = u
        self.table = cum / cum[-1]
        self.slope = _bump(u) / cum[-1]
        self.total = cum[-1]
        self.h = h

    def _cdf(self, u):
        """Normalized running integral B(u)/B(1) for u in [-1, 1]."""
        u = np.clip(u, -1.0, 1.0)
        t = (u + 1.0) / self.h
        j = np.minimum(np.floor(t).astype(int), self.n_table - 1)
        r = t - j
        y0, y1 = self.table[j], self.table[j + 1]
        m0, m1 = self.slope[j] * self.h, self.slope[j + 1] * self.h
        r2, r3 = r * r, r * r * r
        return ((2 * r3 - 3 * r2 + 1) * y0 + (r3 - 2 * r2 + r) * m0
                + (-2 * r3 + 3 * r2) * y1 + (r3 - r2) * m1)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s <= 0.5, 1.0, 0.0)
        mid = (s > 0.5) & (s < 1.0)
        if np.any(mid):
            out = np.array(out, dtype=float)
            out[mid] = 1.0 - self._cdf(4.0 * s[mid] - 3.0)
        return out

    def derivative(self, s, order):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self(s)
        u = 4.0 * s - 3.0
        if order == 1:
            d = _bump(u)
        elif order == 2:
            d = _bump_d1(u)
        elif order == 3:
            d = _bump_d2(u)
        else:
            raise ValueError("cutoff derivatives are provided up to order 3")
        return -(4.0 ** order) * d / self.total

    def tables(self):
        """Arrays consumed by the compiled trajectory kernels."""
        return self.table, self.slope, self.total


class ExpRatioCutoff:
    """psi(s) = g(1-s) / (g(1-s) + g(s-1/2)), g(t) = exp(-1/t) for t > 0.

    A second smooth monotone realization used to check that results do not
    depend on the particular cutoff.  Orders 2 and 3 are differentiated
    numerically from the closed-form first derivative.
    """

    name = "exp-ratio"
    code = 1

    @staticmethod
    def _g(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    @staticmethod
    def _dg(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = np.exp(-1.0 / tp) / (tp * tp)
        return out

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        a = self._g(1.0 - s)
        b = self._g(s - 0.5)
        return a / (a + b)

    def _d1(self, s):
        s = np.asarray(s, dtype=float)
        a, b = self._g(1.0 - s), self._g(s - 0.5)
        da, db = -self._dg(1.0 - s), self._dg(s - 0.5)
        return (da * b - a * db) / (a + b) ** 2

    def derivative(self, s, order):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self(s)
        if order == 1:
            return self._d1(s)
        h = 1e-4
        if order == 2:
            return (-self._d1(s + 2 * h) + 8 * self._d1(s + h)
                    - 8 * self._d1(s - h) + self._d1(s - 2 * h)) / (12 * h)
        if order == 3:
            return (self._d1(s + h) - 2 * self._d1(s) + self._d1(s - h)) / (h * h)
        raise ValueError("cutoff derivatives are provided up to order 3")

    def tables(self):
        z = np.zeros(2)
        return z, z, 1.0


_DEFAULT_CUTOFF = None


def default_cutoff():
    global _DEFAULT_CUTOFF
    if _DEFAULT_CUTOFF is None:
        _DEFAULT_CUTOFF = BumpIntegralCutoff()
    return _DEFAULT_CUTOFF


def make_cutoff(name):
    if name in ("bump-integral", "bump", None):
        return default_cutoff()
    if name == "exp-ratio":
        return ExpRatioCutoff()
    raise ValueError(f"unknown cutoff {name!r}")


@dataclass(frozen=True)
class DerivativeSup:
    value: float
    distributional_atom: bool = False


@dataclass
class PotentialField:
    """The cutoff potential and its derivatives.

    ``region`` arguments are axis-aligned boxes given as one ``(lo, hi)``
    pair per space dimension.
    """

    theta: float = 0.0
    variant: str = "line"
    cutoff: object = field(default_factory=default_cutoff)
    space_dims: int = 2

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.space_dims not in (1, 2):
            raise ValueError("space_dims must be 1 or 2")

    @property
    def kinked(self):
        """True when the force jumps across {x1 = 0}."""
        return self.variant == "line" and self.theta == 0.0

    def describe(self):
        return {"theta": self.theta, "variant": self.variant,
                "cutoff": self.cutoff.name, "space_dims": self.space_dims}

    # -- separable factors ------------------------------------------------
    def _p(self, s, order):
        """Derivatives of 1 - |s|^(1+theta)."""
        th = self.theta
        a = np.abs(s)
        sg = np.sign(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            if order == 0:
                return 1.0 - a ** (1.0 + th)
            if order == 1:
                return -(1.0 + th) * a ** th * sg
            if order == 2:
                if th == 0.0:
                    return np.zeros_like(a)
                return -(1.0 + th) * th * a ** (th - 1.0)
            if order == 3:
                if th == 0.0:
                    return np.zeros_like(a)
                return -(1.0 + th) * th * (th - 1.0) * a ** (th - 2.0) * sg
        raise ValueError(order)

    def _c(self, s, order):
        """Derivatives of psi(|s|)."""
        a = np.abs(s)
        d = self.cutoff.derivative(a, order)
        if order % 2 == 1:
            d = d * np.sign(s)
        return d

    def _f(self, s, order):
        """Derivatives of the x1 factor."""
        s = np.asarray(s, dtype=float)
        if self.variant == "free":
            return np.zeros_like(s)
        if self.variant == "smooth":
            return self._c(s, order)
        total = np.zeros_like(s)
        for j in range(order + 1):
            pj = self._p(s, j)
            cj = self._c(s, order - j)
            with np.errstate(invalid="ignore"):
                term = comb(order, j) * pj * cj
            # a singular power multiplied by an exactly vanishing cutoff factor is zero
            term = np.where(cj == 0.0, 0.0, term)
            total = total + term
        return total

    def _g(self, s, order):
        s = np.asarray(s, dtype=float)
        if self.variant == "free":
            return np.zeros_like(s)
        return self._c(s, order)

    # -- public evaluation ------------------------------------------------
    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if self.space_dims == 1:
            if x.ndim == 0:
                return x, None
            if x.shape[-1:] == (1,):
                return x[..., 0], None
            return x, None
        return x[..., 0], x[..., 1]

    def evaluate(self, x):
        """V at points ``x`` of shape (..., space_dims); 1D accepts bare arrays."""
        x1, x2 = self._split(x)
        if self.variant == "free":
            return np.zeros_like(np.asarray(x1, dtype=float))
        g2 = 1.0 if x2 is None else self._g(x2, 0)
        if self.variant == "point" and x2 is not None:
            r = np.hypot(x1, x2)
            return (1.0 - r ** (1.0 + self.theta)) * self._c(x1, 0) * g2
        return self._f(x1, 0) * g2

    __call__ = evaluate

    def gradient(self, x):
        """grad V, shape (..., space_dims).  The x1 component is 0 on {x1 = 0}."""
        x1, x2 = self._split(x)
        x1 = np.asarray(x1, dtype=float)
        if self.space_dims == 1:
            return self._f(x1, 1)[..., None]
        if self.variant == "free":
            return np.zeros(x1.shape + (2,))
        if self.variant == "point":
            th = self.theta
            r = np.hypot(x1, x2)
            radial = 1.0 - r ** (1.0 + th)
            with np.errstate(divide="ignore", invalid="ignore"):
                dr = np.where(r > 0, -(1.0 + th) * r ** (th - 1.0), 0.0)
            c1, c2 = self._c(x1, 0), self._g(x2, 0)
            d1 = dr * x1 * c1 * c2 + radial * self._c(x1, 1) * c2
            d2 = dr * x2 * c1 * c2 + radial * c1 * self._g(x2, 1)
            d1 = np.where(x1 == 0.0, 0.0, d1)
            return np.stack([d1, d2], axis=-1)
        f0, f1 = self._f(x1, 0), self._f(x1, 1)
        g0, g1 = self._g(x2, 0), self._g(x2, 1)
        return np.stack([f1 * g0, f0 * g1], axis=-1)

    def partial(self, x, multi_index):
        """Mixed partial derivative of total order <= 3 (line/smooth/free only)."""
        if self.variant == "point" and self.space_dims == 2:
            raise NotImplementedError("use derivative_sup for the point variant")
        x1, x2 = self._split(x)
        a1 = multi_index[0]
        if self.space_dims == 1:
            return self._f(x1, a1)
        return self._f(x1, a1) * self._g(x2, multi_index[1])

    def energy(self, x, k):
        """pi |k|^2 + V(x) / (2 pi), conserved along the characteristics."""
        k = np.asarray(k, dtype=float)
        return np.pi * np.sum(k * k, axis=-1) + self.evaluate(x) / (2.0 * np.pi)

    def support_box(self):
        return [(-1.0, 1.0)] * self.space_dims


# -- region-wise derivative sups ------------------------------------------

def _interval_pieces(lo, hi, strip):
    """Split [lo, hi] minus {|s| < strip} into closed sub-intervals."""
    pieces = []
    if strip > 0.0:
        if hi <= -strip or lo >= strip:
            pieces.append((lo, hi))
        else:
            if lo <= -strip:
                pieces.append((lo, -strip))
            if hi >= strip:
                pieces.append((strip, hi))
    else:
        pieces.append((lo, hi))
    return pieces


def _abs_ranges(lo, hi):
    """Ranges of |s| covered by s in [lo, hi], as (a_lo, a_hi) pairs."""
    if lo >= 0:
        return [(lo, hi)]
    if hi <= 0:
        return [(-hi, -lo)]
    return [(0.0, max(-lo, hi))]


def _factor_sup(fun, order, lo, hi, strip, singular_at_zero):
    """sup |fun(s, order)| over [lo, hi] \\ {|s| < strip}.

    ``singular_at_zero`` tells whether the factor's order-th derivative is
    unbounded at s = 0; callers decide what that means.  Returns
    (value, touches_zero).
    """
    best = 0.0
    touches_zero = False
    for plo, phi in _interval_pieces(lo, hi, strip):
        for alo, ahi in _abs_ranges(plo, phi):
            if alo == 0.0:
                touches_zero = True
            # plateau |s| <= 1/2: closed form, power law is monotone so the
            # extremes sit at the endpoints
            plo_a, phi_a = alo, min(ahi, 0.5)
            if plo_a <= phi_a:
                ends = np.array([plo_a, phi_a])
                if singular_at_zero and plo_a == 0.0:
                    ends = ends[ends > 0.0]
                if ends.size:
                    vals = np.abs(fun(ends, order))
                    vals = vals[np.isfinite(vals)]
                    if vals.size:
                        best = max(best, float(vals.max()))
            tlo, thi = max(alo, 0.5), min(ahi, 1.0)
            if tlo < thi:
                n = max(2, int(np.ceil((thi - tlo) / SUP_STEP)) + 1)
                s = np.linspace(tlo, thi, n)
                best = max(best, SUP_SAFETY * float(np.abs(fun(s, order)).max()))
    return best, touches_zero


def derivative_sup(V, order, region, strip=0.0):
    """Upper estimate of sup over ``region`` of max_{|A|=order} |d^A V|.

    Points with |x1| < ``strip`` are excluded.  Plateau pieces are evaluated
    in closed form; cutoff transition pieces are sampled on a 1e-3 grid and
    the sampled maximum is inflated by 10%.  For theta = 0 the second
    derivative of |x1| is a measure on {x1 = 0}: the almost-everywhere value
    is returned with ``distributional_atom=True``.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0..3")
    region = [tuple(map(float, r)) for r in region]
    if len(region) != V.space_dims:
        raise ValueError("region dimension does not match the potential")
    if V.variant == "free":
        return DerivativeSup(0.0)
    if V.variant == "point" and V.space_dims == 2:
        return _point_sup(V, order, region, strip)

    th = V.theta
    singular_variant = V.variant == "line"
    atom = False
    best = 0.0
    dims = V.space_dims
    indices = [a for a in product(range(order + 1), repeat=dims) if sum(a) == order]
    for idx in indices:
        a1 = idx[0]
        singular = singular_variant and a1 >= 2 and th < a1 - 1
        s1, touches = _factor_sup(V._f, a1, *region[0], strip, singular)
        if dims == 2:
            s2, _ = _factor_sup(V._g, idx[1], *region[1], 0.0, False)
        else:
            s2 = 1.0
        if singular and touches and s2 > 0.0:
            if th == 0.0 and a1 == 2:
                atom = True
            else:
                raise UnboundedDerivative(
                    f"d^{idx} V is unbounded on {{x1 = 0}} for theta={th}; "
                    "exclude a strip around the axis")
        best = max(best, s1 * s2)
    return DerivativeSup(best, atom)


def _point_sup(V, order, region, strip):
    (x1lo, x1hi), (x2lo, x2hi) = region
    contains_origin = (x1lo <= 0 <= x1hi and x2lo <= 0 <= x2hi
                       and strip == 0.0)
    if order >= 2 and contains_origin:
        raise UnboundedDerivative("point singularity inside the region")
    n1 = max(3, int(np.ceil((x1hi - x1lo) / SUP_STEP)) + 1)
    n2 = max(3, int(np.ceil((x2hi - x2lo) / SUP_STEP)) + 1)
    # cap the dense grid; the result is an upper estimate regardless
    n1, n2 = min(n1, 801), min(n2, 801)
    g1 = np.linspace(x1lo, x1hi, n1)
    g2 = np.linspace(x2lo, x2hi, n2)
    g1 = g1[np.abs(g1) >= strip] if strip > 0 else g1
    X = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
    if order == 0:
        return DerivativeSup(float(np.abs(V.evaluate(X)).max()))
    if order == 1:
        return DerivativeSup(float(np.abs(V.gradient(X)).max()))
    h = 1e-5 if order == 2 else 1e-4
    best = 0.0
    eye = np.eye(2)
    for j in range(2):
        dg = (V.gradient(X + h * eye[j]) - V.gradient(X - h * eye[j])) / (2 * h)
        if order == 2:
            best = max(best, float(np.abs(dg).max()))
        else:
            for l in range(2):
                d2 = (V.gradient(X + h * eye[j] + h * eye[l])
                      - V.gradient(X + h * eye[j] - h * eye[l])
                      - V.gradient(X - h * eye[j] + h * eye[l])
                      + V.gradient(X - h * eye[j] - h * eye[l])) / (4 * h * h)
                best = max(best, float(np.abs(d2).max()))
    return DerivativeSup(SUP_SAFETY * best)


def derivative_sup_upto(V, order, region, strip=0.0):
    """max over orders 0..order of derivative_sup (the sup_{|a|<=order} form)."""
    vals = [derivative_sup(V, m, region, strip).value for m in range(order + 1)]
    return max(vals)


def tabulate(V, x1, x2=None):
    """Rows (x1, x2, V, dV1, dV2) on the tensor grid, for CSV export."""
    if V.space_dims == 1 or x2 is None:
        x1 = np.asarray(x1, dtype=float)
        pts = x1[:, None]
        vals = V.evaluate(x1) if V.space_dims == 1 else V.evaluate(
            np.stack([x1, np.zeros_like(x1)], axis=-1))
        grad = V.gradient(pts if V.space_dims == 1 else
                          np.stack([x1, np.zeros_like(x1)], axis=-1))
        zeros = np.zeros_like(x1)
        d2 = grad[:, 1] if grad.shape[-1] == 2 else zeros
        return np.column_stack([x1, zeros, vals, grad[:, 0], d2])
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    P = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    vals = V.evaluate(P)
    grad = V.gradient(P)
    return np.column_stack([P[:, 0], P[:, 1], vals, grad[:, 0], grad[:, 1]])
