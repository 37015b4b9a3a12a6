"""Headline computations: quantum-vs-classical gap sweeps, the calibration
table of the cutoff pipeline, mass splitting over the singular line,
trajectory-pair galleries and the two-accumulation-points example.

The quantum side of every comparison is a Toeplitz state whose atoms sit on
the same tensor quadrature nodes that seed the classical ensemble, so the
gap measures the dynamics and the coherent-state smoothing, not quadrature.
"""
import time
from itertools import combinations, product
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

from .classical import (ParticleEnsemble, default_classical_dt, ensemble_pairings,
                        eta_pair, evolve_ensemble, h2_bound, integrate_trajectories)
from .errors import InteractionIncomplete
from .potential import PotentialField, default_cutoff
from .quantum import QuantumRun, SpatialGrid, default_dt, evolve_mixed
from .states import (BumpProfile, InitialDataSpec, build_schedule, default_horizon,
                     toeplitz_quadrature, x1_cutoff)
from .transforms import PhaseSpaceField, norm

SNAPSHOT_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)
MONOTONE_SLACK = 1.2


# ---------------------------------------------------------------------------
# test functions

@dataclass(frozen=True)
class GaussianBump:
    """exp(-|x-x0|^2/(2 sx^2) - |k-k0|^2/(2 sk^2)) cos(2 pi f.(x - x0))."""

    label: str
    x0: tuple
    k0: tuple
    sx: float
    sk: float
    freq: tuple = None

    def __call__(self, x, k):
        x, k = np.asarray(x, float), np.asarray(k, float)
        dx = x - np.asarray(self.x0)
        dk = k - np.asarray(self.k0)
        val = np.exp(-np.sum(dx * dx, -1) / (2 * self.sx ** 2) - np.sum(dk * dk, -1) / (2 * self.sk ** 2))
        if self.freq is not None:
            val = val * np.cos(2 * np.pi * np.sum(dx * np.asarray(self.freq), -1))
        return val

    def k_range(self):
        k0 = np.atleast_1d(self.k0)
        return k0 - 7 * self.sk, k0 + 7 * self.sk

    def min_k_width(self):
        return self.sk

    def describe(self):
        return {"label": self.label, "x0": list(self.x0), "k0": list(self.k0),
                "sx": self.sx, "sk": self.sk, "freq": None if self.freq is None else list(self.freq)}


@dataclass(frozen=True)
class SideIndicator:
    """Mollified indicator of {sign * x1 > 0} inside a mollified box |x2 - c| < h (k-independent)."""

    label: str
    sign: float
    width: float
    box: tuple = None

    def __call__(self, x, k):
        x = np.asarray(x, float)
        s = 1.0 / (np.sqrt(2.0) * self.width)
        val = 0.5 * (1.0 + erf(self.sign * x[..., 0] * s))
        if self.box is not None and x.shape[-1] > 1:
            lo, hi = self.box
            val = val * 0.25 * (1 + erf((x[..., 1] - lo) * s)) * (1 + erf((hi - x[..., 1]) * s))
        return val

    def k_range(self):
        return None

    def min_k_width(self):
        return np.inf

    def describe(self):
        return {"label": self.label, "sign": self.sign, "width": self.width,
                "box": None if self.box is None else list(self.box)}


class TestFunctionSet:
    """Labeled test functions with recorded A and L2 norms on their sampling grid."""

    __test__ = False  # not a pytest class

    def __init__(self, functions):
        self.functions = list(functions)
        self.norms = {}

    def __iter__(self):
        return iter(self.functions)

    def __len__(self):
        return len(self.functions)

    @property
    def labels(self):
        return [f.label for f in self.functions]

    def sample(self, sgrid, k_points=None):
        """Fields of every function on phase grids sharing the x axes of ``sgrid``."""
        n = sgrid.dims
        bumps = [f for f in self.functions if f.k_range() is not None]
        if bumps:
            lo = np.min([f.k_range()[0] for f in bumps], axis=0)
            hi = np.max([f.k_range()[1] for f in bumps], axis=0)
            width = min(f.min_k_width() for f in bumps)
            if k_points is None:
                k_points = [int(2 ** np.ceil(np.log2(max(8.0, (b - a) / (width / 4.0)))))
                            for a, b in zip(lo, hi)]
            grid = sgrid.phase_grid(0.5 * (hi - lo), k_points, 0.5 * (hi + lo))
        flat = sgrid.phase_grid(1.0, 2, 0.0)
        fields = []
        for f in self.functions:
            g = grid if f.k_range() is not None else flat
            x, k = g.points()
            phi = PhaseSpaceField(g, f(x, k), tag="TestFunction")
            if f.k_range() is not None:
                self.norms[f.label] = {"AlgA": norm(phi, "AlgA"), "L2": norm(phi, "L2")}
            fields.append(phi)
        return fields


def default_test_functions(spec, V, T, dt=None):
    """Five bumps along the +- exit channels and one on the singular region."""
    n = spec.space_dims
    sx = [max(2.0 * w, 0.15) for w in spec.widths()[:n]]
    sk = [max(2.0 * w, 0.15) for w in spec.widths()[n:]]
    sx, sk = float(np.mean(sx)), float(np.mean(sk))
    dt = default_classical_dt(T) if dt is None else dt
    eta = 0.25 * spec.dx
    x0 = np.array([spec.x_center, spec.x_center], dtype=float)
    x0[0, 0] += eta
    x0[1, 0] -= eta
    k0 = np.array([spec.k_center, spec.k_center], dtype=float)
    t, X, P = integrate_trajectories(x0, k0, V, T, dt, record_every=1)
    half = len(t) // 2
    out = [GaussianBump("start", tuple(spec.x_center), tuple(spec.k_center), sx, sk)]
    for name, idx in (("mid", half), ("end", -1)):
        for j, side in ((0, "plus"), (1, "minus")):
            out.append(GaussianBump(f"{name}_{side}", tuple(X[idx, j]), tuple(P[idx, j]), sx, sk))
    core_k = tuple(P[half].mean(axis=0))
    out.append(GaussianBump("singular", (0.0,) * n, core_k, sx, sk,
                            freq=(1.0,) + (0.0,) * (n - 1)))
    return TestFunctionSet(out)


# ---------------------------------------------------------------------------
# comparison engine

@dataclass
class ComparisonReport:
    eps: float
    t: float
    phi_id: str
    quantum_pairing: float
    classical_pairing: float
    calibration: dict
    meta: dict = field(default_factory=dict)

    @property
    def gap(self):
        return abs(self.quantum_pairing - self.classical_pairing)

    def row(self):
        d = {"eps": self.eps, "t": self.t, "phi_id": self.phi_id,
             "quantum": self.quantum_pairing, "classical": self.classical_pairing,
             "gap": self.gap}
        d.update(self.calibration)
        d.update({k: v for k, v in self.meta.items() if np.isscalar(v)})
        return d


def atom_grid(state, V, T, dt=None, points_per_wavelength=4.0, pad=1.3):
    """Spatial grid covering every atom's classical path plus a Gaussian margin.

    Steps satisfy the Schrodinger resolution rule eps / (ppw k_max) per axis.
    """
    eps = state.eps
    dt = default_classical_dt(T) if dt is None else dt
    t, X, P = integrate_trajectories(state.x, state.k, V, T, dt, record_every=10)
    sig = np.sqrt(eps / (4 * np.pi))
    spread = np.sqrt(sig ** 2 + (2 * np.pi * sig * T) ** 2)
    margin = 8.0 * spread + 4.0 * sig
    lo = X.min(axis=(0, 1)) - margin
    hi = X.max(axis=(0, 1)) + margin
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo) * pad + 0.05
    k_max = np.abs(P).max(axis=(0, 1)) + 6.0 * sig
    return SpatialGrid.covering(c - h, c + h, eps / (points_per_wavelength * k_max)), k_max


def compare(spec, V, phis, T, nodes, snapshots=None, dt=None, cdt=None,
            self_compare=False, batch=16, workers=1, sgrid=None):
    """Quantum and classical pairings of the same data at the snapshot times."""
    eps = spec.eps
    snapshots = tuple(f * T for f in SNAPSHOT_FRACTIONS) if snapshots is None else tuple(snapshots)
    cdt = default_classical_dt(T) if cdt is None else cdt
    ens = ParticleEnsemble.from_spec(spec, nodes)
    t0 = time.perf_counter()
    classical, _ = ensemble_pairings(ens, V, snapshots, cdt, list(phis))
    meta = {"nodes": str(np.atleast_1d(nodes).tolist()), "classical_dt": cdt}
    if self_compare:
        quantum = classical.copy()
        meta["quantum"] = "classical"
    else:
        state = toeplitz_quadrature(spec, eps, nodes)
        if sgrid is None:
            sgrid, _ = atom_grid(state, V, T, cdt)
        dt = default_dt(eps, T, len(snapshots) - 1) if dt is None else dt
        fields = phis.sample(sgrid) if isinstance(phis, TestFunctionSet) else TestFunctionSet(phis).sample(sgrid)
        run = QuantumRun(V, dt, T, snapshots, workers)
        res = evolve_mixed(state, V, run, fields, sgrid, batch=batch)
        quantum = res["pairings"]
        meta.update({"dt": dt, "grid": str(sgrid.describe()), "n_atoms": int(state.n_atoms),
                     "trace_drift": float(np.abs(res["trace"] - 1.0).max()),
                     "boundary": res["boundary"]})
    meta["seconds"] = time.perf_counter() - t0
    labels = [f.label for f in phis]
    cal = spec.schedule.residuals()
    reports = [ComparisonReport(eps, float(t), labels[j], float(quantum[s, j]),
                                float(classical[s, j]), cal, dict(meta))
               for s, t in enumerate(snapshots) for j in range(len(labels))]
    return reports


def gap_table(reports):
    """{(t, phi_id): [gap per eps in report order]} and the eps list."""
    eps_list = sorted({r.eps for r in reports}, reverse=True)
    table = {}
    for r in reports:
        key = (r.meta.get("t_fraction", r.t), r.phi_id)
        table.setdefault(key, {})[r.eps] = r.gap
    return eps_list, {k: [v[e] for e in eps_list if e in v] for k, v in table.items()}


def monotone_within(values, slack=MONOTONE_SLACK):
    """True when values[i+1] <= slack * values[i] for every i."""
    v = np.asarray(values, float)
    return bool(np.all(v[1:] <= slack * v[:-1]))


def loglog_slope(eps_list, values):
    return float(np.polyfit(np.log(eps_list), np.log(values), 1)[0])


def gap_sweep(theta, eps_list, template, phis, T, nodes, variant="line", cutoff=None,
              snapshots_fractions=SNAPSHOT_FRACTIONS, self_compare=False, dt_for=None,
              batch=16, workers=1):
    """Compare quantum and classical evolutions for every eps in ``eps_list``.

    ``template`` is an InitialDataSpec whose schedule is rebuilt per eps;
    ``phis`` a TestFunctionSet or a callable spec -> TestFunctionSet.
    Returns (reports, summary) where summary holds, per (t fraction, phi),
    the gap list, its monotonicity within slack 1.2 and the log-log slope.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing")
    cutoff = default_cutoff() if cutoff is None else cutoff
    V = PotentialField(theta, variant, cutoff, template.space_dims)
    reports = []
    for eps in eps_list:
        sched = build_schedule(theta, eps, T, template.schedule.C_margin
                               if template.schedule.C_margin >= T else None)
        spec = replace(template, schedule=sched)
        fs = phis(spec, V) if callable(phis) and not isinstance(phis, TestFunctionSet) else phis
        snaps = [f * T for f in snapshots_fractions]
        dt = None if dt_for is None else dt_for(eps, T)
        rep = compare(spec, V, fs, T, nodes, snaps, dt=dt, self_compare=self_compare,
                      batch=batch, workers=workers)
        for r, f in zip(rep, [f for f in snapshots_fractions for _ in range(len(fs))]):
            r.meta["t_fraction"] = f
            r.meta["theta"] = theta
        reports.extend(rep)
    summary = summarize(reports)
    return reports, summary


def summarize(reports):
    eps_list, table = gap_table(reports)
    out = {}
    for key, gaps in table.items():
        gaps = np.asarray(gaps)
        slope = loglog_slope(eps_list, gaps) if np.all(gaps > 0) and len(gaps) > 1 else float("nan")
        out[key] = {"gaps": gaps.tolist(), "monotone": monotone_within(gaps), "slope": slope}
    return {"eps_list": eps_list, "rows": out}


# ---------------------------------------------------------------------------
# mass splitting over the singular line

@dataclass
class SplitResult:
    c_plus: float
    c_minus: float
    quantum_c_plus: float = float("nan")
    quantum_c_minus: float = float("nan")
    meta: dict = field(default_factory=dict)

    def as_tuple(self):
        return self.c_plus, self.c_minus, self.quantum_c_plus, self.quantum_c_minus

    def row(self):
        d = {"c_plus": self.c_plus, "c_minus": self.c_minus,
             "quantum_c_plus": self.quantum_c_plus, "quantum_c_minus": self.quantum_c_minus}
        d.update({k: v for k, v in self.meta.items() if np.isscalar(v)})
        return d


def _inside_support(V, x):
    inside = np.ones(x.shape[0], dtype=bool)
    for j, (lo, hi) in enumerate(V.support_box()):
        inside &= (x[:, j] > lo) & (x[:, j] < hi)
    return inside


def classical_side_masses(spec, V, T, nodes=16, dt=None):
    """(c_plus, c_minus, ensemble at T); raises when mass is still inside the potential support."""
    dt = default_classical_dt(T) if dt is None else dt
    ens = evolve_ensemble(ParticleEnsemble.from_spec(spec, nodes), V, T, dt)
    stuck = float(ens.weights[_inside_support(V, ens.x)].sum())
    if stuck > 0.0:
        raise InteractionIncomplete(
            f"mass {stuck:.3e} is still inside the potential support at t={T:g}")
    plus, minus, axis = ens.side_masses()
    # particles pinned on the axis split evenly by the mirror symmetry of V
    return plus + 0.5 * axis, minus + 0.5 * axis, ens


def side_indicators(sgrid, width_steps=2.0, margin_widths=6.0):
    """Mollified indicators of {x1 > 0} and {x1 < 0} restricted to the grid's x2 range."""
    steps = sgrid.steps
    width = width_steps * float(steps[0])
    box = None
    if sgrid.dims == 2:
        c, h = float(sgrid.center[1]), float(sgrid.half[1])
        inset = margin_widths * width_steps * float(steps[1])
        box = (c - h + inset, c + h - inset)
    return TestFunctionSet([SideIndicator("side_plus", 1.0, width, box),
                            SideIndicator("side_minus", -1.0, width, box)])


def quantum_side_masses(state, V, T, dt=None, sgrid=None, batch=1, workers=1):
    """Quantum (c_plus, c_minus) of a Toeplitz state at time T and run metadata."""
    if sgrid is None:
        sgrid, _ = atom_grid(state, V, T)
    dt = default_dt(state.eps, T, 1) if dt is None else dt
    phis = side_indicators(sgrid)
    run = QuantumRun(V, dt, T, (T,), workers)
    t0 = time.perf_counter()
    res = evolve_mixed(state, V, run, phis.sample(sgrid), sgrid, batch=batch)
    plus, minus = res["pairings"][-1]
    meta = {"dt": dt, "grid": str(sgrid.describe()), "n_atoms": int(state.n_atoms),
            "trace": float(res["trace"][-1]), "boundary": res["boundary"],
            "quantum_seconds": time.perf_counter() - t0}
    return float(plus), float(minus), meta


def exit_horizon(spec, margin=1.25):
    """Time for the slowest particle of the data to clear the potential support.

    Uses the lowest launch speed reduced by the barrier height 1/(2 pi) in energy.
    """
    n = spec.space_dims
    fk, fx = spec.bump.factors[-1], spec.bump.factors[n - 1]
    lo_k = spec.k_center[-1] + spec.dk * fk.lo
    k_eff2 = lo_k ** 2 - 1.0 / (2.0 * np.pi ** 2)
    if lo_k <= 0 or k_eff2 <= 0:
        raise InteractionIncomplete("part of the data cannot cross the barrier")
    start = spec.x_center[-1] + spec.dx * fx.lo
    dist = 1.0 - start if n == 2 else 1.0 + abs(start)
    return margin * dist / (2.0 * np.pi * np.sqrt(k_eff2))


def split_masses(spec, T, V=None, nodes=16, quantum=False, quantum_nodes=(2, 2, 1, 1),
                 dt=None, cdt=None, sgrid=None, batch=1, workers=1):
    """Classical and (optionally) quantum masses on each side of {x1 = 0} at time T."""
    if V is None:
        V = PotentialField(spec.schedule.theta, "line", default_cutoff(), spec.space_dims)
    cp, cm, ens = classical_side_masses(spec, V, T, nodes, cdt)
    out = SplitResult(cp, cm, meta={"eps": spec.eps, "T": T, "nodes": str(np.atleast_1d(nodes).tolist()),
                                    "classical_sum_error": abs(cp + cm - 1.0)})
    if quantum:
        state = toeplitz_quadrature(spec, spec.eps, quantum_nodes)
        qp, qm, meta = quantum_side_masses(state, V, T, dt, sgrid, batch, workers)
        out.quantum_c_plus, out.quantum_c_minus = qp, qm
        out.meta.update(meta)
        out.meta["quantum_nodes"] = str(list(quantum_nodes))
    return out


# ---------------------------------------------------------------------------
# trajectory-pair gallery

DEFAULT_ETAS = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)


def barrier_momentum(V):
    """Launch momentum below which a particle on the axis is turned back by the barrier."""
    x2 = np.linspace(-1.0, 1.0, 4001)
    vmax = float(V.evaluate(np.column_stack([np.zeros_like(x2), x2])).max())
    return float(np.sqrt(max(vmax, 0.0) / (2.0 * np.pi ** 2)))


def exit_time(X, K, V, eta, dt=None, margin=1.1, t_max=None):
    """Time at which the (+eta, -X) trajectory leaves the potential support for good."""
    t_max = 8.0 * (X + 1.0) / (2.0 * np.pi * K) if t_max is None else t_max
    dt = default_classical_dt(t_max) if dt is None else dt
    t, Xs, _ = integrate_trajectories([[eta, -X]], [[0.0, K]], V, t_max, dt, record_every=10)
    inside = _inside_support(V, Xs[:, 0])
    if not inside.any():
        raise InteractionIncomplete("the trajectory never enters the potential support")
    last = int(np.nonzero(inside)[0][-1])
    if last == len(t) - 1:
        raise InteractionIncomplete(f"trajectory still inside the support at t={t_max:g}")
    return margin * float(t[last + 1])


@dataclass
class Gallery:
    K_list: tuple
    X: float
    theta: float
    pairs: dict
    horizons: dict
    turned_back: dict
    k_barrier: float

    @property
    def angles(self):
        return {K: p.exit_angle for K, p in self.pairs.items()}

    def min_angle_separation(self):
        a = np.sort(np.asarray(list(self.angles.values())))
        return float(np.diff(a).min()) if a.size > 1 else float("inf")

    def rows(self):
        out = []
        for K in self.K_list:
            p = self.pairs[K]
            out.append({"K": K, "T": self.horizons[K], "exit_angle": p.exit_angle,
                        "turned_back": self.turned_back[K], "mirror_error": p.mirror_error,
                        "converged": p.converged,
                        "increments": " ".join(f"{v:.6e}" for v in p.increments)})
        return out


def figure1_gallery(K_list, X=2.0, theta=0.0, eta_list=DEFAULT_ETAS, dt=None,
                    record_every=5, variant="line"):
    """eta-regularized trajectory pairs for each launch momentum K, run until exit."""
    V = PotentialField(theta, variant, default_cutoff(), 2)
    pairs, horizons, back = {}, {}, {}
    for K in K_list:
        K = float(K)
        T = exit_time(X, K, V, eta_list[-1])
        step = default_classical_dt(T) if dt is None else dt
        p = eta_pair(X, K, V, eta_list, T, step, record_every)
        pairs[K], horizons[K] = p, T
        back[K] = bool(p.plus.P[-1, 1] < 0.0)
    return Gallery(tuple(float(K) for K in K_list), X, theta, pairs, horizons, back,
                   barrier_momentum(V))


# ---------------------------------------------------------------------------
# oscillating offsets: two accumulation points

def alternating_offset(C, m):
    """C (-1)^m (log m)^(-1/2)."""
    return float(C * (-1.0) ** m / np.sqrt(np.log(m)))


@dataclass
class TwoLimitsReport:
    C: float
    theta: float
    rows: list

    def side(self, parity, key="side_plus"):
        return [r[key] for r in self.rows if r["m"] % 2 == parity]

    @property
    def separation(self):
        """|side mass of the last even m - side mass of the last odd m|."""
        return abs(self.side(0)[-1] - self.side(1)[-1])

    @property
    def alternates(self):
        s = np.array([r["side_plus"] for r in self.rows]) - 0.5
        return bool(np.all(s[1:] * s[:-1] < 0))


def two_limits_demo(C=2.0, m_list=(77, 78, 79, 80), theta=0.0, X=2.0, K=1.0, nodes=16,
                    quantum=True, quantum_terms=2, quantum_nodes=(2, 2, 1, 1),
                    steps=None, workers=1):
    """Side mass on {x1 > 0} for data shifted by the alternating offset, eps = 1/m."""
    m_list = [int(m) for m in m_list]
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be increasing")
    V = PotentialField(theta, "line", default_cutoff(), 2)
    bump = BumpProfile.make("symmetric", 2)
    rows = []
    q_from = len(m_list) - (quantum_terms if quantum else 0)
    for i, m in enumerate(m_list):
        eps = 1.0 / m
        d = alternating_offset(C, m)
        sched = build_schedule(theta, eps, T=1.0)
        spec = InitialDataSpec(bump, sched, X=X, K=K, offset=d)
        T = exit_horizon(spec)
        q = i >= q_from
        dt = None if steps is None else T / steps
        res = split_masses(spec, T, V, nodes, quantum=q, quantum_nodes=quantum_nodes,
                           dt=dt, workers=workers)
        row = {"m": m, "eps": eps, "offset": d, "T": T, "delta_x": spec.dx,
               "side_plus": res.c_plus / (res.c_plus + res.c_minus)}
        if q:
            # the quantum run only sees the coarse atom nodes; compare it with the
            # classical pushforward of those same nodes
            cp, cm, _ = classical_side_masses(spec, V, T, quantum_nodes)
            tot = res.quantum_c_plus + res.quantum_c_minus
            row["atoms_side_plus"] = cp / (cp + cm)
            row["quantum_side_plus"] = res.quantum_c_plus / tot
            row["quantum_gap"] = abs(row["quantum_side_plus"] - row["atoms_side_plus"])
            row["quantum_seconds"] = res.meta["quantum_seconds"]
        else:
            row["atoms_side_plus"] = float("nan")
            row["quantum_side_plus"] = float("nan")
            row["quantum_gap"] = float("nan")
        rows.append(row)
    return TwoLimitsReport(float(C), float(theta), rows)


# ---------------------------------------------------------------------------
# calibration table of the cutoff pipeline
#
# F0 and F3 are tensor products, so every norm below reduces to 1D integrals:
#   ||F3 - F0||_1 = int psi(|x1| / R') a_1(x1) dx1
#   ||(I - Phi) F3||_2^2 = int |prod_i g_i - 1|^2 prod_i |f_i^|^2,  g = exp(-pi eps xi^2 / 2)
# and with g = 1 - eps a, a = -expm1(-pi eps xi^2 / 2) / eps, the product
# prod_i g_i - 1 = sum_{S nonempty} (-eps)^|S| prod_{i in S} a_i expands into
# moments M_i[j] = int a_i^j |f_i^|^2 without cancellation at tiny eps.

FACTOR_POINTS = 1 << 14


class _FactorSpectrum:
    """Fine periodic sampling of a 1D factor and its Fourier transform."""

    def __init__(self, fun, lo, hi, points=FACTOR_POINTS, pad=3.0):
        width = hi - lo
        self.t = np.linspace(lo - pad * width, hi + pad * width, points, endpoint=False)
        self.h = self.t[1] - self.t[0]
        self.values = fun(self.t)
        self.xi = np.fft.fftfreq(points, self.h)
        self.power = np.abs(self.h * np.fft.fft(self.values)) ** 2
        self.dxi = 1.0 / (points * self.h)

    def l1(self):
        return float(np.abs(self.values).sum() * self.h)

    def derivative_l2(self, order):
        w = (2.0 * np.pi * self.xi) ** (2 * order)
        return float(np.sqrt(np.sum(w * self.power) * self.dxi))

    def moments(self, log_eps, jmax=2):
        eps = np.exp(log_eps)
        a = -np.expm1(-0.5 * np.pi * eps * self.xi ** 2) / eps
        return [float(np.sum(a ** j * self.power) * self.dxi) for j in range(jmax + 1)]


def _smoothing_defect(spectra, log_eps):
    """||(I - Phi^eps) f||_2 for f the tensor product of ``spectra``."""
    d = len(spectra)
    M = [s.moments(log_eps) for s in spectra]
    total = 0.0
    subsets = [S for r in range(1, d + 1) for S in combinations(range(d), r)]
    for S in subsets:
        for Sp in subsets:
            p = len(S) + len(Sp) - 2
            term = (-1.0) ** (len(S) + len(Sp)) * np.exp(p * log_eps) if p else 1.0
            for i in range(d):
                term *= M[i][(i in S) + (i in Sp)]
            total += term
    return float(np.exp(log_eps) * np.sqrt(max(total, 0.0)))


def _sobolev_product(spectra, order):
    """sum_{|A| <= order} prod_i ||d^{a_i} f_i||_2."""
    d = len(spectra)
    tab = [[s.derivative_l2(o) for o in range(order + 1)] for s in spectra]
    return float(sum(np.prod([tab[i][a] for i, a in enumerate(A)])
                     for A in product(range(order + 1), repeat=d) if sum(A) <= order))


def claim_row(spec, cutoff=None, X_region=None):
    """Measured cutoff-pipeline norms for one schedule point (exact 1D reductions)."""
    cutoff = default_cutoff() if cutoff is None else cutoff
    sched = spec.schedule
    Rp = sched.R_prime
    d = 2 * spec.space_dims
    spectra = []
    for i, f in enumerate(spec.bump.factors):
        c, s = spec.centers[i], spec.scales[i]
        lo, hi = c + s * f.lo, c + s * f.hi
        if i == 0:
            fun = lambda t, i=i: spec.axis(i, t) * x1_cutoff(t, Rp, cutoff)
        else:
            fun = lambda t, i=i: spec.axis(i, t)
        spectra.append(_FactorSpectrum(fun, lo, hi))
    # the x1 factor of F3 - F0 is -psi(|x1|/R') a_1
    f1 = spec.bump.factors[0]
    lo, hi = spec.centers[0] + spec.dx * f1.lo, spec.centers[0] + spec.dx * f1.hi
    t = np.linspace(lo, hi, 200001)
    cut = spec.axis(0, t) * cutoff(np.abs(t) / Rp)
    l1 = float(np.sum(0.5 * (cut[1:] + cut[:-1])) * (t[1] - t[0]))
    l2 = _smoothing_defect(spectra, sched.log_eps)
    h1 = _sobolev_product(spectra, 1)
    h2 = _sobolev_product(spectra, 2)
    res = sched.residuals()
    half = 0.5 * sched.log_eps
    env_l1 = res["sqrt_eps_over_dx"] + res["sqrt_eps_over_dk"] + res["Rprime_over_dx"]
    env_l2 = float(np.exp(half) * h1)
    V = PotentialField(sched.theta, "line", cutoff, spec.space_dims)
    region = X_region or V.support_box()
    log_rho = h2_bound(V, region, sched.T, h2, strip=0.5 * Rp, log=True) if h2 > 0 else -np.inf
    row = {"theta": sched.theta, "log_eps": sched.log_eps, "R": sched.R,
           "delta_x": sched.delta_x, "delta_k": sched.delta_k, "R_prime": Rp,
           "L1_F3_minus_F0": l1, "L1_envelope": env_l1,
           "L2_F2_minus_F3": l2, "L2_envelope": env_l2, "H1_F3": h1, "H2_F3": h2,
           "log_H2_rho1_bound": log_rho, "log_H2_rho1_budget": -half,
           "H2_audit_ok": bool(log_rho < -half)}
    row.update(res)
    row["L1_constant"] = l1 / env_l1
    row["L2_constant"] = l2 / env_l2 if env_l2 > 0 else float("nan")
    return row


@dataclass
class ClaimTable:
    rows: list

    def column(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)

    def constant_spread(self, key):
        """max/min of a fitted-constant column (inf when any entry is 0 or undefined)."""
        c = self.column(key)
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            return float("inf")
        return float(c.max() / c.min())

    def decreasing(self, key):
        return bool(np.all(np.diff(self.column(key)) < 0))

    def l2_rowwise_ok(self):
        return bool(np.all(self.column("L2_F2_minus_F3") <= self.column("L2_envelope") * (1 + 1e-12)))


def claim_table(theta, log_eps_list, T=1.0, template=None, cutoff=None):
    """Calibration table along a decreasing list of log eps values."""
    log_eps_list = [float(v) for v in log_eps_list]
    if any(b >= a for a, b in zip(log_eps_list, log_eps_list[1:])):
        raise ValueError("log_eps_list must be decreasing")
    bump = BumpProfile.make("symmetric", 2) if template is None else template.bump
    rows = []
    for le in log_eps_list:
        sched = build_schedule(theta, T=T, log_eps=le)
        spec = (InitialDataSpec(bump, sched) if template is None
                else replace(template, schedule=sched))
        rows.append(claim_row(spec, cutoff))
    return ClaimTable(rows)


# ---------------------------------------------------------------------------
# feasibility of the schedule on a finite grid

def grid_requirement(theta, log_eps, X=2.0, K=1.0, T=None, points_per_wavelength=4.0):
    """log2 of the Schrodinger grid points needed along x2 for the launch configuration.

    The step must resolve the fastest oscillation, eps / (ppw k_max); the extent
    covers the data and its free transit over [0, T].  Evaluated in log space.
    """
    sched = build_schedule(theta, T=1.0 if T is None else T, log_eps=log_eps)
    T = default_horizon(X, K) if T is None else T
    k_max = K + sched.delta_k
    extent = sched.delta_x + 2.0 * np.pi * k_max * T + 1.0
    log_points = np.log(extent) + np.log(points_per_wavelength * k_max) - log_eps
    return float(log_points / np.log(2.0))


def feasibility(theta, log_eps_list, max_points=2048, **kw):
    """[(log_eps, log2 points, deconvolution ok, feasible)] along the list."""
    out = []
    bump = BumpProfile.make("symmetric", 2)
    for le in log_eps_list:
        sched = build_schedule(theta, log_eps=le)
        widths = InitialDataSpec(bump, sched).widths()
        deconv = bool(min(widths) >= np.exp(0.5 * le))
        lp = grid_requirement(theta, le, **kw)
        out.append({"theta": theta, "log_eps": float(le), "log2_points": lp,
                    "deconvolution_ok": deconv,
                    "feasible": bool(deconv and lp <= np.log2(max_points))})
    return out
