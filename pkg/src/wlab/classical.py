"""Liouville evolution by characteristics: weighted particle ensembles,
single trajectories, eta-regularized trajectory pairs, the H^2 growth bound
and the singular-set shadow diagnostic.

Characteristics: dx/dt = 2 pi k, dk/dt = -(1/2 pi) grad V(x).  The heavy
lifting is done by :func:`wlab.kernels.advance`.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergent
from .kernels import advance
from .potential import derivative_sup, derivative_sup_upto
from .states import quadrature_nodes

SMOOTH_STRIP = 0.1  # |x1| above which trajectories are classically smooth
AXIS_STRIP = 0.05  # half-width of the strip where the shadow test evaluates d^3 V


def default_classical_dt(T):
    return min(1e-3, T / 1000.0)


def _steps(t_end, dt):
    n = int(np.ceil(t_end / dt - 1e-9))
    return max(n, 1), t_end / max(n, 1)


# ---------------------------------------------------------------------------
# ensembles

@dataclass
class ParticleEnsemble:
    """Weighted phase-space points; weights are never modified by evolution."""

    x: np.ndarray
    k: np.ndarray
    weights: np.ndarray
    time: float = 0.0
    provenance: str = "quadrature"
    on_axis: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.array(np.atleast_2d(self.x), dtype=float)
        self.k = np.array(np.atleast_2d(self.k), dtype=float)
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.x.shape != self.k.shape or self.x.shape[0] != self.weights.size:
            raise ValueError("particle arrays have inconsistent shapes")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if self.on_axis is None:
            # seeded exactly on the axis at rest: the zero-force convention pins them there
            self.on_axis = (self.x[:, 0] == 0.0) & (self.k[:, 0] == 0.0)

    @classmethod
    def from_spec(cls, spec, nodes=16):
        x, k, w = quadrature_nodes(spec, nodes)
        return cls(x, k, w, provenance="quadrature",
                   meta={"nodes": np.atleast_1d(nodes).tolist()})

    @classmethod
    def from_field(cls, F):
        """Grid nodes weighted by field value times cell volume (zero cells dropped)."""
        x, k = F.grid.points()
        n = F.grid.space_dims
        w = np.real(F.values).ravel() * F.grid.cell_volume
        keep = w > 0
        return cls(x.reshape(-1, n)[keep], k.reshape(-1, n)[keep], w[keep],
                   provenance="quadrature")

    @classmethod
    def from_mixed(cls, state):
        return cls(state.x, state.k, state.weights, provenance="atom-sample")

    @property
    def size(self):
        return self.weights.size

    @property
    def space_dims(self):
        return self.x.shape[1]

    def total_weight(self):
        return float(self.weights.sum())

    def copy(self):
        return ParticleEnsemble(self.x.copy(), self.k.copy(), self.weights.copy(),
                                self.time, self.provenance, self.on_axis.copy(),
                                dict(self.meta))

    def mirrored(self):
        e = self.copy()
        e.x[:, 0] *= -1.0
        e.k[:, 0] *= -1.0
        return e

    def pairing(self, phi):
        """<rho, phi> = sum_i w_i phi(x_i, k_i) for a callable phi(x, k)."""
        return float(np.dot(self.weights, phi(self.x, self.k)))

    def side_masses(self):
        """(mass on x1 > 0, mass on x1 < 0, flagged on-axis mass)."""
        free = ~self.on_axis
        w = self.weights
        plus = float(w[free & (self.x[:, 0] > 0)].sum())
        minus = float(w[free & (self.x[:, 0] < 0)].sum())
        return plus, minus, float(w[self.on_axis].sum())

    def describe(self):
        return {"size": int(self.size), "provenance": self.provenance,
                "time": self.time, **self.meta}


def evolve_ensemble(ens, V, t_end, dt):
    """Push every particle forward by t_end; returns a new ensemble."""
    out = ens.copy()
    n, h = _steps(t_end, dt)
    advance(V, out.x, out.k, h, n)
    out.time = ens.time + t_end
    return out


def ensemble_pairings(ens, V, snapshots, dt, phis):
    """Pairings (n_snapshots, n_phi) of the pushforward at increasing times."""
    cur = ens.copy()
    t = ens.time
    out = np.zeros((len(snapshots), len(phis)))
    for s, ts in enumerate(snapshots):
        if ts > t:
            n, h = _steps(ts - t, dt)
            advance(V, cur.x, cur.k, h, n)
            t = ts
        for j, phi in enumerate(phis):
            out[s, j] = cur.pairing(phi)
    cur.time = t
    return out, cur


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class Trajectory:
    times: np.ndarray
    X: np.ndarray
    P: np.ndarray
    eta: float = 0.0

    def energy(self, V):
        return V.energy(self.X, self.P)

    def energy_drift(self, V, mask=None):
        H = self.energy(V)
        if mask is not None:
            H = H[mask]
        return float(np.abs(H - H[0]).max()) if H.size else 0.0

    def rows(self):
        """(t, x1, x2, k1, k2, eta) rows for CSV output."""
        n = self.X.shape[1]
        X = self.X if n == 2 else np.column_stack([self.X, np.zeros_like(self.X)])
        P = self.P if n == 2 else np.column_stack([self.P, np.zeros_like(self.P)])
        return np.column_stack([self.times, X, P, np.full(self.times.size, self.eta)])


def integrate_trajectories(x0, k0, V, t_end, dt, record_every=1):
    """Integrate many trajectories at once; arrays of shape (n_records, P, n)."""
    x = np.array(np.atleast_2d(x0), dtype=float)
    k = np.array(np.atleast_2d(k0), dtype=float)
    n, h = _steps(t_end, dt)
    xs, ks, ts = [x.copy()], [k.copy()], [0.0]
    done = 0
    while done < n:
        m = min(record_every, n - done)
        advance(V, x, k, h, m)
        done += m
        xs.append(x.copy())
        ks.append(k.copy())
        ts.append(done * h)
    return np.asarray(ts), np.stack(xs), np.stack(ks)


def integrate_trajectory(x0, k0, V, t_end, dt, eta=0.0, record_every=1):
    """RK4 characteristic from (x0, k0), with fine sub-steps near the axis."""
    t, X, P = integrate_trajectories(x0, k0, V, t_end, dt, record_every)
    return Trajectory(t, X[:, 0], P[:, 0], eta)


@dataclass
class EtaPair:
    plus: Trajectory
    minus: Trajectory
    eta_list: tuple
    increments: np.ndarray
    converged: bool
    exit_angle: float
    mirror_error: float


def eta_pair(X, K, V, eta_list, T, dt=None, record_every=1):
    """Trajectory pairs launched at (+-eta, -X) with momentum (0, K).

    Returns the smallest-eta pair and the Cauchy increments
    max_t |X_eta(t) - X_eta'(t)| between consecutive entries of ``eta_list``.
    """
    eta_list = tuple(float(e) for e in eta_list)
    if any(b >= a for a, b in zip(eta_list, eta_list[1:])):
        raise ValueError("eta_list must be decreasing")
    if eta_list[-1] < 1e-6:
        raise ValueError("smallest eta must be at least 1e-6")
    dt = default_classical_dt(T) if dt is None else dt
    etas = np.asarray(eta_list)
    x0 = np.column_stack([np.concatenate([etas, -etas]), np.full(2 * etas.size, -X)])
    k0 = np.tile([0.0, K], (2 * etas.size, 1))
    t, Xs, Ps = integrate_trajectories(x0, k0, V, T, dt, record_every)
    m = etas.size
    plus, minus = Xs[:, :m], Xs[:, m:]
    inc = np.array([np.abs(plus[:, i] - plus[:, i + 1]).max() for i in range(m - 1)])
    converged = bool(np.all(np.diff(inc) < 0))
    if not converged:
        warnings.warn("eta-Cauchy increments are not decreasing", NonConvergent, stacklevel=2)
    tp = Trajectory(t, plus[:, -1], Ps[:, m - 1], eta_list[-1])
    tm = Trajectory(t, minus[:, -1], Ps[:, -1], -eta_list[-1])
    mirror = np.concatenate([tp.X[:, :1] + tm.X[:, :1], tp.X[:, 1:] - tm.X[:, 1:]], axis=1)
    # angle of the exit velocity of the + branch, measured from the +x2 axis
    angle = float(np.arctan2(tp.P[-1, 0], tp.P[-1, 1]))
    return EtaPair(tp, tm, eta_list, inc, converged, angle, float(np.abs(mirror).max()))


# ---------------------------------------------------------------------------
# bounds and diagnostics

def h2_bound(V, region, t, f0_h2, C1=1.0, C2=1.0, strip=0.0, log=False):
    """C1 exp(t C2 sup_{|a|<=3} |d^a V|) ||f0||_{H^2} over ``region``.

    With ``log=True`` the natural logarithm is returned, which stays finite
    when the exponential overflows.
    """
    S = derivative_sup_upto(V, 3, region, strip)
    with np.errstate(divide="ignore", over="ignore"):
        value = np.log(C1) + t * C2 * S + np.log(f0_h2)
        return float(value) if log else float(np.exp(value))


def third_derivative_max(V, x):
    """max_{|A|=3} |d^A V(x)| pointwise (line, smooth and free variants)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if V.space_dims == 1:
        with np.errstate(all="ignore"):
            return np.abs(V.partial(x[:, 0], (3,)))
    best = np.zeros(x.shape[0])
    with np.errstate(all="ignore"):
        for a in range(4):
            best = np.fmax(best, np.abs(V.partial(x, (a, 3 - a))))
    return best


def _singular_axis(V):
    """True when d^3 V fails to be a bounded function on {x1 = 0, |x2| < 1}."""
    return V.variant == "line"


def shadow_mass(V, zeta, T, F0, dt=None, samples=200, nodes=16):
    """Mass of F0 carried into N = {sup_{|A|=3} |d^A V| > zeta} within [0, T].

    ``F0`` is an InitialDataSpec (quadrature nodes) or a ParticleEnsemble.
    A point belongs to the shadow M when its forward characteristic meets N
    at one of ``samples`` equally spaced times, or crosses the singular axis
    between two samples.
    """
    if not np.isfinite(zeta):
        return 0.0
    ens = F0 if isinstance(F0, ParticleEnsemble) else ParticleEnsemble.from_spec(F0, nodes)
    if V.variant == "point":
        raise NotImplementedError("the shadow diagnostic covers the line variant")
    dt = default_classical_dt(T) if dt is None else dt
    per = T / samples
    n_sub, h = _steps(per, dt)
    x, k = ens.x.copy(), ens.k.copy()
    hit = np.zeros(ens.size, dtype=bool)
    axis = _singular_axis(V)
    # away from a thin axis strip the third derivatives are bounded; skip those points when possible
    region = [(-1.0, 1.0)] * V.space_dims
    near = AXIS_STRIP if derivative_sup(V, 3, region, AXIS_STRIP).value <= zeta else np.inf
    for s in range(samples + 1):
        if s:
            prev = x[:, 0].copy()
            advance(V, x, k, h, n_sub)
            if axis:
                inside = np.abs(x[:, 1]) < 1.0 if ens.space_dims == 2 else True
                hit |= (prev * x[:, 0] <= 0.0) & inside
        cand = np.nonzero(~hit & (np.abs(x[:, 0]) < near))[0]
        if cand.size:
            hit[cand] |= third_derivative_max(V, x[cand]) > zeta
    return float(ens.weights[hit].sum())


def default_zeta(log_eps):
    """(-log eps)^2: grows along the schedule and exceeds the cutoff's third derivatives."""
    return float(log_eps) ** 2
