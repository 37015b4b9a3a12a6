"""Quantum propagation: Strang split-step Schrodinger solver for pure states,
mixed Toeplitz states as weighted atom ensembles, and a one-dimensional
Wigner-equation solver used as an independent cross-check.

Equation: i eps u_t = (-eps^2/2 Lap + V) u.  In Fourier variables xi
(cycles per unit length) the kinetic symbol is (eps/2)(2 pi |xi|)^2 / eps
per unit time after dividing by eps, so a kinetic step of length h
multiplies the spectrum by exp(-i h (eps/2) (2 pi |xi|)^2).
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .constants import TWO_PI
from .errors import BoundaryLeakWarning, NumericalAssertionError, Underresolved
from .transforms import (BOUNDARY_BAND, PhaseSpaceField, PhaseSpaceGrid,
                         inverse_partial_fourier, partial_fourier, wigner_pairings)

NORM_TOL = 1e-12


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [c - h, c + h) per space axis."""

    half: tuple
    points: tuple
    center: tuple = None

    def __post_init__(self):
        half = tuple(float(h) for h in np.atleast_1d(self.half))
        pts = tuple(int(p) for p in np.atleast_1d(self.points))
        if len(pts) == 1 and len(half) > 1:
            pts = pts * len(half)
        cen = (0.0,) * len(half) if self.center is None else tuple(
            float(c) for c in np.atleast_1d(self.center))
        if not (len(half) == len(pts) == len(cen)) or len(half) not in (1, 2):
            raise ValueError("inconsistent spatial grid description")
        for m in pts:
            if m < 2 or m & (m - 1):
                raise ValueError("resolutions must be powers of two")
        object.__setattr__(self, "half", half)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "center", cen)

    @classmethod
    def covering(cls, lo, hi, max_step):
        """Smallest power-of-two grid covering [lo, hi] per axis with step <= max_step."""
        lo, hi, max_step = (np.atleast_1d(np.asarray(v, float)) for v in (lo, hi, max_step))
        max_step = np.broadcast_to(max_step, lo.shape)
        pts = [int(2 ** np.ceil(np.log2((b - a) / s))) for a, b, s in zip(lo, hi, max_step)]
        return cls(tuple(0.5 * (hi - lo)), tuple(pts), tuple(0.5 * (hi + lo)))

    @property
    def dims(self):
        return len(self.points)

    @property
    def shape(self):
        return self.points

    @property
    def steps(self):
        return tuple(2.0 * h / m for h, m in zip(self.half, self.points))

    @property
    def cell(self):
        return float(np.prod(self.steps))

    def axes(self):
        return [c - h + d * np.arange(m) for c, h, d, m in
                zip(self.center, self.half, self.steps, self.points)]

    def freqs(self):
        return [sfft.fftfreq(m, d) for m, d in zip(self.points, self.steps)]

    def points_array(self):
        full = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(full, axis=-1)

    def phase_grid(self, k_half, k_points, k_center=None):
        """Phase-space grid sharing these x axes."""
        return PhaseSpaceGrid(self.dims, self.half, k_half, self.points, k_points,
                              self.center, k_center)

    def describe(self):
        return {"half": list(self.half), "points": list(self.points),
                "center": list(self.center)}


def spatial_grid_of(grid):
    """The x part of a PhaseSpaceGrid."""
    return SpatialGrid(grid.x_half, grid.x_points, grid.x_center)


def check_resolution(grid, eps, k_max, points_per_wavelength=4):
    """Require at least ``points_per_wavelength`` points per wavelength eps / k_max on every axis."""
    k_max = np.broadcast_to(np.atleast_1d(np.asarray(k_max, float)), (grid.dims,))
    for step, km in zip(grid.steps, k_max):
        if km > 0 and step > eps / (points_per_wavelength * km):
            raise Underresolved(
                f"step {step:.3e} exceeds eps/({points_per_wavelength} k_max) = "
                f"{eps / (points_per_wavelength * km):.3e}")


@dataclass
class PureState:
    grid: SpatialGrid
    u: np.ndarray
    eps: float

    def norm2(self):
        return float(np.sum(np.abs(self.u) ** 2) * self.grid.cell)

    def normalized(self):
        return PureState(self.grid, self.u / np.sqrt(self.norm2()), self.eps)


class SplitStep:
    """Strang step: half kinetic, full potential, half kinetic.

    Works on arrays whose trailing axes are the grid (leading axes batch atoms).
    """

    def __init__(self, V, grid, eps, dt, workers=1):
        self.grid, self.eps, self.dt, self.workers = grid, float(eps), float(dt), workers
        xi2 = 0.0
        for j, f in enumerate(grid.freqs()):
            shape = [1] * grid.dims
            shape[j] = f.size
            xi2 = xi2 + (f ** 2).reshape(shape)
        self.half_kinetic = np.exp(-0.5j * dt * 0.5 * eps * TWO_PI ** 2 * xi2)
        vx = V.evaluate(grid.points_array()) if grid.dims == 2 else V.evaluate(grid.axes()[0])
        self.potential_phase = np.exp(-1j * dt * vx / eps)
        self._axes = tuple(range(-grid.dims, 0))

    def __call__(self, u, n_steps=1):
        ax, w = self._axes, self.workers
        spec = sfft.fftn(u, axes=ax, workers=w)
        for i in range(n_steps):
            spec *= self.half_kinetic
            u = sfft.ifftn(spec, axes=ax, workers=w)
            u *= self.potential_phase
            spec = sfft.fftn(u, axes=ax, workers=w)
            spec *= self.half_kinetic
        return sfft.ifftn(spec, axes=ax, workers=w)


def schrodinger_step(state, V, dt, k_max=None):
    """One Strang step of a pure state; ``k_max`` enables the resolution check."""
    if k_max is not None:
        check_resolution(state.grid, state.eps, k_max)
    u = SplitStep(V, state.grid, state.eps, dt)(np.asarray(state.u, dtype=complex))
    return PureState(state.grid, u, state.eps)


def boundary_fraction(u, dims):
    """max |u| in the boundary bands of the trailing ``dims`` axes relative to max |u|."""
    a = np.abs(u)
    scale = float(a.max())
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for ax in range(a.ndim - dims, a.ndim):
        m = a.shape[ax]
        band = max(1, int(np.ceil(BOUNDARY_BAND * m)))
        worst = max(worst, float(np.take(a, np.arange(band), axis=ax).max()),
                    float(np.take(a, np.arange(m - band, m), axis=ax).max()))
    return worst / scale


@dataclass
class QuantumRun:
    """Propagation settings; snapshot times must be multiples of dt."""

    potential: object
    dt: float
    t_end: float
    snapshots: tuple = None
    workers: int = 1

    def __post_init__(self):
        if self.snapshots is None:
            self.snapshots = tuple(self.t_end * np.arange(5) / 4.0)
        self.snapshots = tuple(float(t) for t in self.snapshots)
        if any(b < a for a, b in zip(self.snapshots, self.snapshots[1:])):
            raise ValueError("snapshots must be increasing")
        steps = np.asarray(self.snapshots) / self.dt
        if np.any(np.abs(steps - np.round(steps)) > 1e-9 * np.maximum(1.0, steps)):
            raise ValueError("dt must divide every snapshot time")

    def step_counts(self):
        s = np.round(np.asarray(self.snapshots) / self.dt).astype(int)
        return np.diff(np.concatenate([[0], s]))


def default_dt(eps, T, snapshots=4):
    """min(sqrt(eps)/10, T/2000), shrunk so that it divides T/snapshots."""
    target = min(np.sqrt(eps) / 10.0, T / 2000.0)
    per = T / snapshots
    return per / int(np.ceil(per / target))


def evolve_mixed(state, V, run, phis, grid, batch=16, boundary_tol=1e-6):
    """Pairings <W(t), phi> of a Toeplitz state at each snapshot time.

    ``grid`` is the SpatialGrid of the atoms; every phi must live on a
    PhaseSpaceGrid sharing its x axes.  Returns a dict with ``times``,
    ``pairings`` (n_snapshots, n_phi) and ``trace`` (n_snapshots,).
    """
    eps = state.eps
    k_max = np.abs(state.k).max(axis=0) + 6.0 * np.sqrt(eps / (4.0 * np.pi))
    check_resolution(grid, eps, k_max)
    for phi in phis:
        if spatial_grid_of(phi.grid) != grid:
            raise ValueError("test function grid does not share the atom x axes")
    stepper = SplitStep(V, grid, eps, run.dt, run.workers)
    counts = run.step_counts()
    n_snap, n_phi = len(counts), len(phis)
    pair = np.zeros((n_snap, n_phi))
    trace = np.zeros(n_snap)
    leak = 0.0
    phis_xK = [phi if phi.domain == "xK" else partial_fourier(phi) for phi in phis]
    groups = {}
    for j, phi in enumerate(phis):
        groups.setdefault(phi.grid, []).append(j)
    groups = list(groups.values())
    axes = grid.axes()
    for start in range(0, state.n_atoms, batch):
        idx = np.arange(start, min(start + batch, state.n_atoms))
        u = np.stack([state.atom(i, axes) for i in idx])
        w = state.weights[idx]
        for s, n in enumerate(counts):
            if n:
                u = stepper(u, int(n))
            norms = np.sum(np.abs(u) ** 2, axis=tuple(range(1, u.ndim))) * grid.cell
            if not np.all(np.isfinite(norms)):
                raise NumericalAssertionError(f"atom batch starting at {start} diverged")
            trace[s] += float(np.sum(w * norms))
            for group in groups:
                Fg = [phis_xK[j] for j in group]
                vals = sum(wi * wigner_pairings(ui, eps, Fg) for wi, ui in zip(w, u))
                pair[s, group] += vals
        leak = max(leak, boundary_fraction(u, grid.dims))
    if leak > boundary_tol:
        warnings.warn(f"wave function reaches {leak:.2e} of its peak near the boundary",
                      BoundaryLeakWarning, stacklevel=2)
    return {"times": np.asarray(run.snapshots), "pairings": pair, "trace": trace,
            "boundary": leak}


# ---------------------------------------------------------------------------
# one-dimensional Wigner equation

@dataclass
class WignerTrajectory:
    times: np.ndarray
    fields: list = field(default_factory=list)
    l2: list = field(default_factory=list)


def _wrap(x, lo, length):
    return lo + np.mod(x - lo, length)


class WignerSplitStep:
    """Strang step for W_t + 2 pi k W_x + T_eps^V W = 0 on a 2D phase-space grid.

    Transport: the x spectrum is multiplied by exp(-2 pi i xi 2 pi k h).
    Kick: F2 W(x, K) is multiplied by exp(+i dt (V(x + eps K/2) - V(x - eps K/2)) / eps),
    the image of the Schrodinger potential phase under F2 W(x, K) = u(x - eps K/2) conj(u(x + eps K/2)).
    """

    def __init__(self, V, grid, eps, dt):
        if grid.space_dims != 1:
            raise ValueError("the Wigner solver works in one space dimension")
        sigma = np.sqrt(eps / (4.0 * np.pi))
        if max(grid.steps) > 0.5 * sigma:
            raise Underresolved("grid steps exceed half the coherent-state width")
        self.grid, self.eps, self.dt = grid, float(eps), float(dt)
        x, k = grid.axes()
        xi = grid.x_freqs()[0]
        self.half_shear = np.exp(-1j * TWO_PI * np.outer(xi, TWO_PI * k) * 0.5 * dt)
        K = grid.K_axes()[0]
        lo, length = x[0], 2.0 * grid.x_half[0]
        s = 0.5 * eps * K
        vp = V.evaluate(_wrap(x[:, None] + s[None, :], lo, length))
        vm = V.evaluate(_wrap(x[:, None] - s[None, :], lo, length))
        self.kick = np.exp(1j * dt * (vp - vm) / eps)
        # the Nyquist bins have no conjugate partner; keep the field real there
        self.kick[:, K.size // 2] = 1.0
        self.half_shear[xi.size // 2, :] = 1.0

    def _shear(self, W):
        return sfft.ifft(sfft.fft(W, axis=0) * self.half_shear, axis=0)

    def __call__(self, W, n_steps=1):
        g = self.grid
        for _ in range(n_steps):
            W = self._shear(W)
            F = partial_fourier(PhaseSpaceField(g, W, tag="TestFunction"))
            F = F.with_values(F.values * self.kick)
            W = inverse_partial_fourier(F).values
            W = self._shear(W)
        return W


def wigner_solver_1d(W0, V, eps, dt, t_end, snapshots=None):
    """Evolve a 1D Wigner field; returns fields and L2 norms at the snapshot times."""
    run = QuantumRun(V, dt, t_end, snapshots)
    stepper = WignerSplitStep(V, W0.grid, eps, dt)
    W = np.asarray(W0.values, dtype=complex)
    out = WignerTrajectory(np.asarray(run.snapshots))
    for n in run.step_counts():
        if n:
            W = stepper(W, int(n))
        f = PhaseSpaceField(W0.grid, W, tag="WignerFunction", eps=eps)
        out.fields.append(f)
        out.l2.append(float(np.sqrt(np.sum(np.abs(W) ** 2) * W0.grid.cell_volume)))
    return out
