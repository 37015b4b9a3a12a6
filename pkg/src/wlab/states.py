"""Initial data: the bump profile w, the concentration schedule, the
scaled data F0 and its cutoff pipeline, and Toeplitz mixed states built
from coherent states.

Phase-space points are ordered (x_1..x_n, k_1..k_n).  The default bump is a
tensor product of one-dimensional cosine-power lobes, so every quantity used
for calibration factorizes over axes.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import gammaln
from scipy.stats import qmc

from .constants import EPS_MAX
from .errors import DeconvolutionFailure, EpsilonTooLarge, Underresolved
from .potential import default_cutoff
from .transforms import PhaseSpaceField, smooth

DEFAULT_POWER = 6
CDF_POINTS = 8193


# ---------------------------------------------------------------------------
# one-dimensional factors

@dataclass(frozen=True)
class CosineLobe:
    """mass * c * cos^p(pi (t - center) / (2 h)) on |t - center| < h, unit-mass shape."""

    center: float
    half_width: float
    mass: float = 1.0
    power: int = DEFAULT_POWER

    @property
    def norm(self):
        p = self.power
        # int_{-pi/2}^{pi/2} cos^p = sqrt(pi) Gamma((p+1)/2) / Gamma(p/2+1)
        ip = np.exp(0.5 * np.log(np.pi) + gammaln(0.5 * (p + 1)) - gammaln(0.5 * p + 1))
        return 1.0 / (self.half_width * 2.0 / np.pi * ip)

    def derivative(self, t, order=0):
        t = np.asarray(t, dtype=float)
        w = 0.5 * np.pi / self.half_width
        u = w * (t - self.center)
        inside = np.abs(t - self.center) < self.half_width
        c, s = np.cos(u), np.sin(u)
        p = self.power
        if order == 0:
            val = c ** p
        elif order == 1:
            val = -p * w * c ** (p - 1) * s
        elif order == 2:
            val = p * w * w * ((p - 1) * c ** (p - 2) * s * s - c ** p)
        else:
            raise ValueError("orders 0..2 only")
        return np.where(inside, self.mass * self.norm * val, 0.0)


class Factor:
    """Sum of cosine lobes along one phase-space axis."""

    def __init__(self, lobes):
        self.lobes = tuple(lobes)
        total = sum(l.mass for l in self.lobes)
        if abs(total - 1.0) > 1e-12:
            raise ValueError("lobe masses must sum to 1")
        self.lo = min(l.center - l.half_width for l in self.lobes)
        self.hi = max(l.center + l.half_width for l in self.lobes)
        t = np.linspace(self.lo, self.hi, CDF_POINTS)
        dens = self(t)
        # cumulative Simpson-free trapezoid on a fine grid; renormalized to 1
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))])
        self._t, self._cdf = t, cdf / cdf[-1]

    def __call__(self, t):
        return self.derivative(t, 0)

    def derivative(self, t, order=0):
        return sum(l.derivative(t, order) for l in self.lobes)

    @property
    def symmetric(self):
        t = np.linspace(self.lo, self.hi, 257)
        return bool(np.allclose(self(t), self(-t), rtol=0, atol=1e-13))

    def cdf(self, t):
        return np.interp(t, self._t, self._cdf, left=0.0, right=1.0)

    def ppf(self, u):
        # strictly increasing only where the density is positive; interp picks the left node
        keep = np.concatenate([[True], np.diff(self._cdf) > 0])
        return np.interp(u, self._cdf[keep], self._t[keep])

    def mass_above(self, t0=0.0):
        """Exact mass on (t0, inf) when t0 splits lobes cleanly, else quadrature."""
        total = 0.0
        for l in self.lobes:
            if l.center - l.half_width >= t0:
                total += l.mass
            elif l.center + l.half_width > t0:
                s = np.linspace(t0, l.center + l.half_width, 20001)
                d = l.derivative(s)
                total += float(np.sum(0.5 * (d[1:] + d[:-1]) * np.diff(s)))
        return total

    def nodes(self, m):
        """m midpoint nodes per lobe with weights summing to 1."""
        ts, ws = [], []
        for l in self.lobes:
            h = 2.0 * l.half_width / m
            t = l.center - l.half_width + h * (np.arange(m) + 0.5)
            w = l.derivative(t) * h
            ts.append(t)
            ws.append(w / w.sum() * l.mass)
        t, w = np.concatenate(ts), np.concatenate(ws)
        order = np.argsort(t, kind="stable")
        return t[order], w[order]

    def moments(self):
        t = np.linspace(self.lo, self.hi, 20001)
        d = self(t)
        dt = t[1] - t[0]
        mean = float(np.sum(t * d) * dt)
        var = float(np.sum((t - mean) ** 2 * d) * dt)
        return mean, np.sqrt(var)

    def describe(self):
        return [{"center": l.center, "half_width": l.half_width, "mass": l.mass,
                 "power": l.power} for l in self.lobes]


# ---------------------------------------------------------------------------
# bump profile

BUMP_KINDS = ("symmetric", "one-sided", "two-lobe", "skewed")


class BumpProfile:
    """Tensor-product bump w on R^(2n), supported in the unit ball, unit mass."""

    def __init__(self, factors, kind="custom"):
        self.factors = tuple(factors)
        self.kind = kind
        if len(self.factors) not in (2, 4):
            raise ValueError("a bump needs 2 (n=1) or 4 (n=2) factors")
        reach = sum(max(f.lo ** 2, f.hi ** 2) for f in self.factors)
        if reach > 1.0 + 1e-12:
            raise ValueError("bump support leaves the unit ball")

    @property
    def phase_dims(self):
        return len(self.factors)

    @property
    def space_dims(self):
        return len(self.factors) // 2

    @classmethod
    def make(cls, kind="symmetric", space_dims=2, power=DEFAULT_POWER, mass_plus=0.7):
        d = 2 * space_dims
        h = 1.0 / np.sqrt(d)
        base = Factor([CosineLobe(0.0, h, 1.0, power)])
        if kind == "symmetric":
            first = base
        elif kind == "one-sided":
            first = Factor([CosineLobe(0.5 * h, 0.5 * h, 1.0, power)])
        elif kind == "two-lobe":
            first = Factor([CosineLobe(0.5 * h, 0.5 * h, mass_plus, power),
                            CosineLobe(-0.5 * h, 0.5 * h, 1.0 - mass_plus, power)])
        elif kind == "skewed":
            first = Factor([CosineLobe(-0.25 * h, 0.75 * h, 0.6, power),
                            CosineLobe(0.5 * h, 0.5 * h, 0.4, power)])
        else:
            raise ValueError(f"unknown bump kind {kind!r}; choose from {BUMP_KINDS}")
        return cls([first] + [base] * (d - 1), kind=kind)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = 1.0
        for i, f in enumerate(self.factors):
            out = out * f(z[..., i])
        return out

    @property
    def symmetric(self):
        """Even in x1."""
        return self.factors[0].symmetric

    def half_space_masses(self):
        """(c+, c-) = masses of w on {x1 > 0} and {x1 < 0}."""
        cp = self.factors[0].mass_above(0.0)
        return cp, 1.0 - cp

    def norms(self):
        """L-infinity, W^{1,1} and H^2 (sum over multi-indices) by 1D quadrature."""
        tabs = []
        for f in self.factors:
            t = np.linspace(f.lo, f.hi, 20001)
            dt = t[1] - t[0]
            d = [f.derivative(t, o) for o in range(3)]
            tabs.append({"max": float(np.abs(d[0]).max()),
                         "l1": [float(np.abs(v).sum() * dt) for v in d],
                         "l2": [float(np.sqrt((v * v).sum() * dt)) for v in d]})
        d = len(self.factors)
        linf = float(np.prod([t["max"] for t in tabs]))
        w11 = h2 = 0.0
        for A in product(range(3), repeat=d):
            if sum(A) <= 1:
                w11 += np.prod([tabs[i]["l1"][a] for i, a in enumerate(A)])
            if sum(A) <= 2:
                h2 += np.prod([tabs[i]["l2"][a] for i, a in enumerate(A)])
        return {"Linf": linf, "W11": float(w11), "H2": float(h2)}

    def describe(self):
        return {"kind": self.kind, "factors": [f.describe() for f in self.factors]}


# ---------------------------------------------------------------------------
# scaling schedule

@dataclass(frozen=True)
class ScalingSchedule:
    """R = (-log eps^(1/4))^(1/(theta-2)), delta_k = delta_x^2 = R, R' = R + C_margin delta_k."""

    theta: float
    log_eps: float
    T: float
    C_margin: float

    @property
    def eps(self):
        return float(np.exp(self.log_eps))

    @property
    def R(self):
        return float((-0.25 * self.log_eps) ** (1.0 / (self.theta - 2.0)))

    @property
    def delta_x(self):
        return float(np.sqrt(self.R))

    @property
    def delta_k(self):
        return self.R

    @property
    def R_prime(self):
        return self.R + self.C_margin * self.delta_k

    def residuals(self):
        """The four calibration residuals, computed in log space for tiny eps."""
        dx, dk = self.delta_x, self.delta_k
        half = 0.5 * self.log_eps
        return {
            "sqrt_eps_over_dx": float(np.exp(half - np.log(dx))),
            "sqrt_eps_over_dk": float(np.exp(half - np.log(dk))),
            "Rprime_over_dx": self.R_prime / dx,
            "h2_budget": float((dx ** -2 + dk ** -2) / (dx * dk) * np.exp(0.25 * self.log_eps)),
        }

    def describe(self):
        d = {"theta": self.theta, "log_eps": self.log_eps, "eps": self.eps, "T": self.T,
             "C_margin": self.C_margin, "R": self.R, "delta_x": self.delta_x,
             "delta_k": self.delta_k, "R_prime": self.R_prime}
        d.update(self.residuals())
        return d


def build_schedule(theta, eps=None, T=1.0, C_margin=None, log_eps=None):
    """Schedule for ``eps`` (or ``log_eps`` when eps underflows); C_margin defaults to T + 1."""
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    if T <= 0:
        raise ValueError("T must be positive")
    if log_eps is None:
        if eps is None or eps <= 0:
            raise ValueError("eps must be positive")
        log_eps = float(np.log(eps))
    if log_eps >= np.log(EPS_MAX):
        raise EpsilonTooLarge(f"eps = exp({log_eps:.6g}) is not below exp(-4)")
    C = T + 1.0 if C_margin is None else float(C_margin)
    if C < T:
        raise ValueError("C_margin must be at least T")
    return ScalingSchedule(float(theta), float(log_eps), float(T), C)


def default_horizon(X, K):
    """Free transit time from x2 = -X across the support (to x2 = 1) plus 25%."""
    return 1.25 * (X + 1.0) / (2.0 * np.pi * K)


# ---------------------------------------------------------------------------
# initial data

@dataclass
class InitialDataSpec:
    """F0(x, k) = dx^-n dk^-n w((x - x_c) / dx, (k - k_c) / dk).

    Centers: x_c = (offset, -X), k_c = (k1, K) in two space dimensions and
    x_c = (offset,), k_c = (k1,) in the reduced one-dimensional runs.  The
    widths default to the schedule values and may be overridden.
    """

    bump: BumpProfile
    schedule: ScalingSchedule
    X: float = 2.0
    K: float = 1.0
    offset: float = 0.0
    k1: float = 0.0
    delta_x: float = None
    delta_k: float = None

    def __post_init__(self):
        if self.space_dims == 2 and self.X <= 1.0:
            raise ValueError("launch distance X must exceed 1")
        if self.K <= 0:
            raise ValueError("launch momentum K must be positive")

    @property
    def space_dims(self):
        return self.bump.space_dims

    @property
    def eps(self):
        return self.schedule.eps

    @property
    def dx(self):
        return self.schedule.delta_x if self.delta_x is None else float(self.delta_x)

    @property
    def dk(self):
        return self.schedule.delta_k if self.delta_k is None else float(self.delta_k)

    @property
    def x_center(self):
        return (self.offset, -self.X) if self.space_dims == 2 else (self.offset,)

    @property
    def k_center(self):
        return (self.k1, self.K) if self.space_dims == 2 else (self.k1,)

    @property
    def centers(self):
        return self.x_center + self.k_center

    @property
    def scales(self):
        n = self.space_dims
        return (self.dx,) * n + (self.dk,) * n

    def axis(self, i, t):
        """Scaled one-dimensional factor along phase-space axis i."""
        c, s = self.centers[i], self.scales[i]
        return self.bump.factors[i]((np.asarray(t) - c) / s) / s

    def density(self, x, k):
        z = np.concatenate([np.asarray(x, float), np.asarray(k, float)], axis=-1)
        z = (z - np.array(self.centers)) / np.array(self.scales)
        return self.bump(z) / float(np.prod(self.scales))

    def widths(self):
        """Per-axis standard deviation of F0."""
        return tuple(s * f.moments()[1] for s, f in zip(self.scales, self.bump.factors))

    def describe(self):
        return {"bump": self.bump.describe(), "schedule": self.schedule.describe(),
                "X": self.X, "K": self.K, "offset": self.offset, "k1": self.k1,
                "delta_x": self.dx, "delta_k": self.dk}


def sample_initial(spec, grid, tol=1e-6):
    """F0 on ``grid``, renormalized to unit mass."""
    n = spec.space_dims
    if grid.space_dims != n:
        raise ValueError("grid and data dimensions differ")
    for step, width in zip(grid.steps, spec.scales):
        if width / step < 8.0:
            raise Underresolved(f"width {width:.3e} spans fewer than 8 grid steps of {step:.3e}")
    vals = np.ones(grid.shape)
    for i, ax in enumerate(grid.axes()):
        shape = [1] * grid.ndim
        shape[i] = ax.size
        vals = vals * spec.axis(i, ax).reshape(shape)
    mass = vals.sum() * grid.cell_volume
    if abs(mass - 1.0) > tol:
        raise Underresolved(f"quadrature mass {mass:.9f} drifts more than {tol:g} from 1")
    return PhaseSpaceField(grid, vals / mass, tag="ClassicalDensity", eps=spec.eps,
                           meta={"raw_mass": float(mass)})


def x1_cutoff(x1, R_prime, cutoff=None):
    """1 - psi(|x1| / R'), vanishing on |x1| <= R'/2."""
    cutoff = default_cutoff() if cutoff is None else cutoff
    return 1.0 - cutoff(np.abs(np.asarray(x1, float)) / R_prime)


def pipeline(F0, schedule, cutoff=None):
    """(F1, F2, F3) with F1 = Phi F0, F3 = (1 - psi(x1/R')) F0, F2 = Phi F3."""
    g = F0.grid
    x1 = g.axes()[0]
    shape = [1] * g.ndim
    shape[0] = x1.size
    F3 = F0.with_values(F0.values * x1_cutoff(x1, schedule.R_prime, cutoff).reshape(shape))
    eps = schedule.eps
    return smooth(F0, eps), smooth(F3, eps), F3


def quadrature_nodes(spec, nodes):
    """Tensor midpoint quadrature of F0: x (M, n), k (M, n), weights (M,) summing to 1."""
    d = 2 * spec.space_dims
    m = (int(nodes),) * d if np.ndim(nodes) == 0 else tuple(int(v) for v in nodes)
    pts, wts = [], []
    for i, f in enumerate(spec.bump.factors):
        t, w = f.nodes(m[i])
        pts.append(spec.centers[i] + spec.scales[i] * t)
        wts.append(w)
    grids = np.meshgrid(*pts, indexing="ij")
    weights = np.ones(())
    for w in wts:
        weights = np.multiply.outer(weights, w)
    z = np.stack([gg.ravel() for gg in grids], axis=-1)
    weights = weights.ravel()
    n = spec.space_dims
    return z[:, :n].copy(), z[:, n:].copy(), weights / weights.sum()


# ---------------------------------------------------------------------------
# coherent and Toeplitz states

def coherent_state(x_axes, x0, k0, eps):
    """(2/eps)^(n/4) exp(-pi |x - x0|^2 / eps) exp(2 pi i k0 (x - x0) / eps) on a tensor grid."""
    out = np.ones((), dtype=complex)
    for ax, a, b in zip(x_axes, np.atleast_1d(x0), np.atleast_1d(k0)):
        s = ax - a
        g = (2.0 / eps) ** 0.25 * np.exp(-np.pi * s * s / eps + 2j * np.pi * b * s / eps)
        out = np.multiply.outer(out, g)
    return out


def gaussian_wigner(grid, x0, k0, eps):
    """Wigner function of a coherent state: (2/eps)^n exp(-2 pi (|x-x0|^2 + |k-k0|^2) / eps)."""
    c = np.concatenate([np.atleast_1d(x0), np.atleast_1d(k0)])
    vals = np.ones(())
    for ax, a in zip(grid.axes(), c):
        vals = np.multiply.outer(vals, np.sqrt(2.0 / eps) * np.exp(-2.0 * np.pi * (ax - a) ** 2 / eps))
    return vals


@dataclass
class MixedState:
    """Toeplitz state sum_i w_i |coherent(x_i, k_i)><coherent(x_i, k_i)|."""

    x: np.ndarray
    k: np.ndarray
    weights: np.ndarray
    eps: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.k = np.atleast_2d(np.asarray(self.k, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if not (self.x.shape == self.k.shape and self.x.shape[0] == self.weights.size):
            raise ValueError("atom arrays have inconsistent shapes")
        if np.any(self.weights <= 0):
            raise ValueError("atom weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("atom weights must sum to 1")

    @classmethod
    def single(cls, x0, k0, eps):
        return cls(np.atleast_2d(x0), np.atleast_2d(k0), [1.0], eps)

    @property
    def n_atoms(self):
        return self.weights.size

    @property
    def space_dims(self):
        return self.x.shape[1]

    def trace(self):
        return float(self.weights.sum())

    def mirrored(self):
        """Image under x1 -> -x1 (and k1 -> -k1)."""
        x, k = self.x.copy(), self.k.copy()
        x[:, 0] *= -1.0
        k[:, 0] *= -1.0
        return MixedState(x, k, self.weights.copy(), self.eps, dict(self.meta))

    def atom(self, i, x_axes):
        return coherent_state(x_axes, self.x[i], self.k[i], self.eps)

    def field(self, grid, tag="WignerFunction", chunk=256):
        """The induced Wigner function sum_i w_i G_eps(. - z_i) on ``grid``."""
        eps = self.eps
        c = np.concatenate([self.x, self.k], axis=1)
        vals = np.zeros(grid.shape)
        letters = "abcd"[: grid.ndim]
        spec = "i," + ",".join("i" + l for l in letters) + "->" + letters
        for start in range(0, self.n_atoms, chunk):
            sl = slice(start, start + chunk)
            facs = [np.sqrt(2.0 / eps) * np.exp(-2.0 * np.pi * (ax[None, :] - c[sl, j, None]) ** 2 / eps)
                    for j, ax in enumerate(grid.axes())]
            vals += np.einsum(spec, self.weights[sl], *facs, optimize=True)
        return PhaseSpaceField(grid, vals, tag=tag, eps=eps)

    def kernel_matrix(self, x_axis):
        """Density matrix sum_i w_i c_i c_i^* on a 1D grid (quadrature weights included)."""
        if self.space_dims != 1:
            raise ValueError("kernel_matrix is available in one space dimension")
        C = np.stack([self.atom(i, [x_axis]) for i in range(self.n_atoms)])
        h = x_axis[1] - x_axis[0]
        return (C.T * self.weights) @ C.conj() * h

    def describe(self):
        return {"n_atoms": int(self.n_atoms), "eps": self.eps, **self.meta}


def _check_deconvolution(widths, eps):
    coherent = np.sqrt(eps)
    narrow = [w for w in widths if w < coherent]
    if narrow:
        raise DeconvolutionFailure(
            f"data width {min(narrow):.3e} is below the coherent width sqrt(eps)={coherent:.3e}")


def _uniforms(n, d, seed, method):
    if method == "random":
        # Philox is counter based: row i is fixed by (seed, i) alone
        gen = np.random.Generator(np.random.Philox(key=int(seed)))
        return gen.random((n, d))
    if method == "sobol":
        return qmc.Sobol(d, scramble=True, seed=int(seed)).random(n)
    raise ValueError("method must be 'random' or 'sobol'")


def toeplitz_sample(F, eps, n_atoms, seed=0, method="random"):
    """Equal-weight Toeplitz state whose measure is drawn from F (spec or field)."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    if isinstance(F, InitialDataSpec):
        _check_deconvolution(F.widths(), eps)
        u = _uniforms(n_atoms, 2 * F.space_dims, seed, method)
        z = np.column_stack([F.centers[i] + F.scales[i] * f.ppf(u[:, i])
                             for i, f in enumerate(F.bump.factors)])
        n = F.space_dims
    else:
        g = F.grid
        vals = np.real(F.values)
        if vals.min() < -1e-12 * np.abs(vals).max():
            raise ValueError("cannot sample a signed field")
        vals = np.clip(vals, 0.0, None)
        mass = vals.sum()
        axes = g.axes()
        widths = []
        for i, ax in enumerate(axes):
            marg = vals.sum(axis=tuple(j for j in range(g.ndim) if j != i)) / mass
            mean = np.sum(marg * ax)
            widths.append(np.sqrt(np.sum(marg * (ax - mean) ** 2)))
        _check_deconvolution(widths, eps)
        u = _uniforms(n_atoms, g.ndim + 1, seed, method)
        cdf = np.cumsum(vals.ravel()) / mass
        cells = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), cdf.size - 1)
        idx = np.unravel_index(cells, g.shape)
        z = np.column_stack([ax[j] + (u[:, 1 + i] - 0.5) * step
                             for i, (ax, j, step) in enumerate(zip(axes, idx, g.steps))])
        n = g.space_dims
    w = np.full(n_atoms, 1.0 / n_atoms)
    return MixedState(z[:, :n], z[:, n:], w, eps,
                      meta={"seed": int(seed), "method": method, "kind": "sampled"})


def toeplitz_quadrature(spec, eps, nodes):
    """Weighted Toeplitz state on the tensor quadrature nodes of F0."""
    _check_deconvolution(spec.widths(), eps)
    x, k, w = quadrature_nodes(spec, nodes)
    keep = w > 0
    w = w[keep] / w[keep].sum()
    return MixedState(x[keep], k[keep], w, eps, meta={"kind": "quadrature",
                                                      "nodes": np.atleast_1d(nodes).tolist()})
