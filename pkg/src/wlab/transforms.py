"""Phase-space grids and fields, the partial Fourier transform in k, the
norm family (L1, L2, Linf, A, A', Sobolev), the Gaussian smoothing operator
and Wigner pairings of pure states.

Axis order of every phase-space array is (x_1..x_n, k_1..k_n).  All grids
are uniform and periodic; the k-transform uses the 2 pi-in-exponent
convention of :mod:`wlab.constants`.
"""
import json
import warnings
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .constants import TWO_PI
from .errors import BoundaryLeakWarning, KernelUnderresolved, ShiftOutOfDomain

TAGS = ("WignerFunction", "ClassicalDensity", "TestFunction")
NORMS = ("L1", "L2", "Linf", "AlgA", "AlgAdual", "H1", "H2")

# values within this fraction of a boundary must be negligible
BOUNDARY_BAND = 0.1
BOUNDARY_TOL = 1e-12


def _tuple(v, n):
    if np.ndim(v) == 0:
        return (float(v),) * n
    v = tuple(float(a) for a in v)
    if len(v) != n:
        raise ValueError(f"expected {n} values, got {len(v)}")
    return v


def _itup(v, n):
    if np.ndim(v) == 0:
        return (int(v),) * n
    v = tuple(int(a) for a in v)
    if len(v) != n:
        raise ValueError(f"expected {n} values, got {len(v)}")
    return v


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform periodic grid on [c - h, c + h) per axis, x axes then k axes."""

    space_dims: int
    x_half: tuple
    k_half: tuple
    x_points: tuple
    k_points: tuple
    x_center: tuple = None
    k_center: tuple = None

    def __post_init__(self):
        n = self.space_dims
        if n not in (1, 2):
            raise ValueError("space_dims must be 1 or 2")
        object.__setattr__(self, "x_half", _tuple(self.x_half, n))
        object.__setattr__(self, "k_half", _tuple(self.k_half, n))
        object.__setattr__(self, "x_points", _itup(self.x_points, n))
        object.__setattr__(self, "k_points", _itup(self.k_points, n))
        object.__setattr__(self, "x_center",
                           _tuple(0.0 if self.x_center is None else self.x_center, n))
        object.__setattr__(self, "k_center",
                           _tuple(0.0 if self.k_center is None else self.k_center, n))
        for m in self.x_points + self.k_points:
            if m < 2 or m & (m - 1):
                raise ValueError("resolutions must be powers of two")

    # -- geometry ---------------------------------------------------------
    @property
    def ndim(self):
        return 2 * self.space_dims

    @property
    def shape(self):
        return self.x_points + self.k_points

    @property
    def halves(self):
        return self.x_half + self.k_half

    @property
    def centers(self):
        return self.x_center + self.k_center

    @property
    def steps(self):
        return tuple(2.0 * h / m for h, m in zip(self.halves, self.shape))

    @property
    def x_steps(self):
        return self.steps[: self.space_dims]

    @property
    def k_steps(self):
        return self.steps[self.space_dims:]

    @property
    def cell_volume(self):
        return float(np.prod(self.steps))

    @property
    def x_cell(self):
        return float(np.prod(self.x_steps))

    def axes(self):
        return [c - h + d * np.arange(m) for c, h, d, m in
                zip(self.centers, self.halves, self.steps, self.shape)]

    def x_axes(self):
        return self.axes()[: self.space_dims]

    def k_axes(self):
        return self.axes()[self.space_dims:]

    def K_axes(self):
        """Dual variables of the k axes, in FFT order."""
        return [sfft.fftfreq(m, d) for m, d in zip(self.k_points, self.k_steps)]

    def x_freqs(self):
        return [sfft.fftfreq(m, d) for m, d in zip(self.x_points, self.x_steps)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def x_mesh(self):
        return np.meshgrid(*self.x_axes(), indexing="ij", sparse=True)

    def points(self):
        """(x, k) coordinates, each of shape grid.shape + (space_dims,)."""
        full = np.meshgrid(*self.axes(), indexing="ij")
        n = self.space_dims
        return np.stack(full[:n], axis=-1), np.stack(full[n:], axis=-1)

    def spatial_points(self):
        full = np.meshgrid(*self.x_axes(), indexing="ij")
        return np.stack(full, axis=-1)

    def describe(self):
        return {"space_dims": self.space_dims, "x_half": list(self.x_half),
                "k_half": list(self.k_half), "x_points": list(self.x_points),
                "k_points": list(self.k_points), "x_center": list(self.x_center),
                "k_center": list(self.k_center)}

    @classmethod
    def from_description(cls, d):
        return cls(d["space_dims"], d["x_half"], d["k_half"], d["x_points"],
                   d["k_points"], d.get("x_center"), d.get("k_center"))


@dataclass
class PhaseSpaceField:
    """Samples of a phase-space function on a :class:`PhaseSpaceGrid`.

    ``domain`` is ``"xk"`` for ordinary fields and ``"xK"`` after
    :func:`partial_fourier`.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray
    tag: str = "ClassicalDensity"
    eps: float = None
    domain: str = "xk"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"tag must be one of {TAGS}")
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if self.domain == "xk":
            if np.iscomplexobj(v) and self.tag == "WignerFunction":
                scale = max(float(np.abs(v).max()), 1e-300)
                residue = float(np.abs(v.imag).max())
                if residue > 1e-10 * scale:
                    raise ValueError(f"Wigner field has imaginary residue {residue:.3e}")
                v = v.real.copy()
            if self.tag == "ClassicalDensity" and not np.iscomplexobj(v):
                scale = max(float(np.abs(v).max()), 1e-300)
                if float(v.min()) < -1e-12 * scale:
                    raise ValueError("classical density has a negative undershoot")
        self.values = v

    def with_values(self, values, **kw):
        d = dict(grid=self.grid, values=values, tag=self.tag, eps=self.eps,
                 domain=self.domain, meta=dict(self.meta))
        d.update(kw)
        return PhaseSpaceField(**d)

    def integral(self):
        return float(np.real(self.values.sum()) * self.grid.cell_volume)

    def pair(self, other):
        """<self, other> by grid quadrature."""
        vals = self.values * (other.values if isinstance(other, PhaseSpaceField) else other)
        return float(np.real(vals.sum()) * self.grid.cell_volume)

    def boundary_fraction(self):
        """max |f| inside the boundary bands relative to max |f|."""
        v = np.abs(self.values)
        scale = float(v.max())
        if scale == 0.0:
            return 0.0
        worst = 0.0
        for ax, m in enumerate(self.grid.shape):
            band = max(1, int(np.ceil(BOUNDARY_BAND * m)))
            lo = np.take(v, np.arange(band), axis=ax)
            hi = np.take(v, np.arange(m - band, m), axis=ax)
            worst = max(worst, float(lo.max()), float(hi.max()))
        return worst / scale

    def check_boundary(self, tol=BOUNDARY_TOL):
        frac = self.boundary_fraction()
        if frac > tol:
            warnings.warn(f"field reaches {frac:.2e} of its peak near the grid boundary",
                          BoundaryLeakWarning, stacklevel=2)
        return frac


def sample(grid, fun, tag="ClassicalDensity", eps=None):
    """Sample ``fun(x, k)`` (points of shape (..., n)) on ``grid``."""
    x, k = grid.points()
    return PhaseSpaceField(grid, fun(x, k), tag=tag, eps=eps)


# ---------------------------------------------------------------------------
# partial Fourier transform in k

def _k_phase(grid):
    """exp(-2 pi i k_start K) per k axis, broadcast over the xK array."""
    n = grid.space_dims
    phase = 1.0
    for j, (K, k0) in enumerate(zip(grid.K_axes(), grid.k_axes())):
        shape = [1] * grid.ndim
        shape[n + j] = K.size
        phase = phase * np.exp(-1j * TWO_PI * k0[0] * K).reshape(shape)
    return phase


def partial_fourier(f):
    """F2 f(x, K) = int exp(-2 pi i k K) f(x, k) dk, K in FFT order."""
    if f.domain != "xk":
        raise ValueError("field is already in the (x, K) domain")
    g = f.grid
    axes = tuple(range(g.space_dims, g.ndim))
    vals = sfft.fftn(f.values, axes=axes) * _k_phase(g) * float(np.prod(g.k_steps))
    return f.with_values(vals, domain="xK")


def inverse_partial_fourier(F):
    if F.domain != "xK":
        raise ValueError("field is not in the (x, K) domain")
    g = F.grid
    axes = tuple(range(g.space_dims, g.ndim))
    vals = sfft.ifftn(F.values / _k_phase(g), axes=axes) / float(np.prod(g.k_steps))
    if F.tag == "WignerFunction" or np.abs(vals.imag).max() <= 1e-12 * max(np.abs(vals).max(), 1e-300):
        vals = vals.real
    return F.with_values(vals, domain="xk")


def dual_volume(grid):
    """Quadrature weight dK of the dual k-grid."""
    return float(np.prod([1.0 / (m * d) for m, d in zip(grid.k_points, grid.k_steps)]))


# ---------------------------------------------------------------------------
# norms

def _sobolev(f, order, p=2):
    """sum over multi-indices |A| <= order of ||d^A f||_{L^p}, spectrally."""
    g = f.grid
    spec = sfft.fftn(f.values)
    freqs = [sfft.fftfreq(m, d) for m, d in zip(g.shape, g.steps)]
    total = 0.0
    n_total = spec.size
    for A in product(range(order + 1), repeat=g.ndim):
        if sum(A) > order:
            continue
        mult = 1.0
        for ax, a in enumerate(A):
            if a:
                shape = [1] * g.ndim
                shape[ax] = freqs[ax].size
                mult = mult * ((1j * TWO_PI * freqs[ax]) ** a).reshape(shape)
        if p == 2:
            total += np.sqrt(np.sum(np.abs(mult * spec) ** 2) * g.cell_volume / n_total)
        else:
            d = sfft.ifftn(mult * spec)
            total += float(np.sum(np.abs(d) ** p) * g.cell_volume) ** (1.0 / p)
    return float(total)


def derivative(f, multi_index):
    """Spectral partial derivative d^A f."""
    g = f.grid
    spec = sfft.fftn(f.values)
    freqs = [sfft.fftfreq(m, d) for m, d in zip(g.shape, g.steps)]
    for ax, a in enumerate(multi_index):
        if a:
            shape = [1] * g.ndim
            shape[ax] = freqs[ax].size
            spec = spec * ((1j * TWO_PI * freqs[ax]) ** a).reshape(shape)
    out = sfft.ifftn(spec)
    if not np.iscomplexobj(f.values):
        out = out.real
    return f.with_values(out, tag="TestFunction")


def sobolev_norm(f, order, p=2):
    return _sobolev(f, order, p)


def norm(f, which):
    """One of L1, L2, Linf, AlgA, AlgAdual, H1, H2."""
    g = f.grid
    if which == "L1":
        return float(np.abs(f.values).sum() * g.cell_volume)
    if which == "L2":
        return float(np.sqrt((np.abs(f.values) ** 2).sum() * g.cell_volume))
    if which == "Linf":
        return float(np.abs(f.values).max())
    if which in ("AlgA", "AlgAdual"):
        F = f if f.domain == "xK" else partial_fourier(f)
        a = np.abs(F.values)
        n = g.space_dims
        x_axes = tuple(range(n))
        if which == "AlgA":
            return float(a.max(axis=x_axes).sum() * dual_volume(g))
        return float((a.sum(axis=x_axes) * g.x_cell).max())
    if which == "H1":
        return _sobolev(f, 1)
    if which == "H2":
        return _sobolev(f, 2)
    raise ValueError(f"unknown norm {which!r}; choose from {NORMS}")


def total_variation(weights):
    """Total variation of a discrete signed measure given by its atom weights."""
    return float(np.abs(np.asarray(weights, dtype=float)).sum())


# ---------------------------------------------------------------------------
# smoothing

def smoothing_multiplier(grid, eps, axes=None):
    """Fourier multiplier of the unit-mass Gaussian exp(-2 pi |z|^2 / eps)."""
    freqs = [sfft.fftfreq(m, d) for m, d in zip(grid.shape, grid.steps)]
    axes = range(grid.ndim) if axes is None else axes
    mult = 1.0
    for ax in axes:
        shape = [1] * grid.ndim
        shape[ax] = freqs[ax].size
        mult = mult * np.exp(-0.5 * np.pi * eps * freqs[ax] ** 2).reshape(shape)
    return mult


def smooth(f, eps, check=True):
    """Phi^eps f: convolution in all phase-space variables with
    (2/eps)^(d/2) exp(-2 pi |z|^2 / eps), computed spectrally."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = f.grid
    if check and np.sqrt(eps) < 3.0 * max(g.steps):
        raise KernelUnderresolved(
            f"sqrt(eps)={np.sqrt(eps):.3e} is below 3 grid steps ({3 * max(g.steps):.3e})")
    vals = sfft.ifftn(sfft.fftn(f.values) * smoothing_multiplier(g, eps))
    if not np.iscomplexobj(f.values):
        vals = vals.real
    return f.with_values(vals)


# ---------------------------------------------------------------------------
# Wigner pairings

SHIFT_MARGIN = 0.2  # fraction of the x half-width usable by shifts
PRUNE_TOL = 1e-15


def _fourier_shift_batch(u_hat, freqs, shifts):
    """u(x + s) for each row s of ``shifts`` by Fourier interpolation."""
    n = len(freqs)
    phase = 1.0
    for j in range(n):
        shape = [shifts.shape[0]] + [1] * n
        shape[1 + j] = freqs[j].size
        phase = phase * np.exp(1j * TWO_PI * np.multiply.outer(shifts[:, j], freqs[j])).reshape(shape)
    return sfft.ifftn(u_hat[None, ...] * phase, axes=tuple(range(1, n + 1)))


def wigner_pairing(u, eps, phi, batch=64, prune=PRUNE_TOL):
    """<W^eps[u], phi> = int int u(x + eps K/2) conj(u(x - eps K/2)) F2 phi(x, K) dx dK.

    ``u`` lives on the x-axes of ``phi.grid``.  The Wigner function itself
    is never formed; shifts use Fourier interpolation of ``u``.
    """
    return float(wigner_pairings(u, eps, [phi], batch, prune)[0])


def wigner_pairings(u, eps, phis, batch=64, prune=PRUNE_TOL):
    """Pairings of one state against several test functions on a common grid.

    Shifted copies of ``u`` are computed once for the union of the K nodes
    that any test function needs.
    """
    if not phis:
        return np.zeros(0)
    g = phis[0].grid
    if any(phi.grid != g for phi in phis):
        raise ValueError("test functions must share one grid")
    if any(phi.tag != "TestFunction" for phi in phis):
        raise ValueError("phi must be tagged TestFunction")
    n = g.space_dims
    u = np.asarray(u, dtype=complex)
    if u.shape != g.x_points:
        raise ValueError("u does not match the spatial grid of phi")
    Fs = [(phi if phi.domain == "xK" else partial_fourier(phi)).values.reshape(g.x_points + (-1,))
          for phi in phis]
    Kgrid = np.stack(np.meshgrid(*g.K_axes(), indexing="ij"), axis=-1).reshape(-1, n)
    weight = np.max([np.abs(F).reshape(-1, Kgrid.shape[0]).max(axis=0) / max(np.abs(F).max(), 1e-300)
                     for F in Fs], axis=0)
    keep = np.nonzero(weight > prune)[0]
    out = np.zeros(len(phis), dtype=complex)
    if keep.size == 0:
        return out.real
    shifts = 0.5 * eps * Kgrid[keep]
    margin = SHIFT_MARGIN * min(g.x_half)
    if np.abs(shifts).max() > margin:
        raise ShiftOutOfDomain(
            f"shift eps*K/2 = {np.abs(shifts).max():.3e} exceeds margin {margin:.3e}")
    u_hat = sfft.fftn(u)
    freqs = g.x_freqs()
    for start in range(0, keep.size, batch):
        sl = slice(start, start + batch)
        s = shifts[sl]
        if np.all(s == 0.0):
            prod = np.broadcast_to(np.abs(u) ** 2, (s.shape[0],) + u.shape)
        else:
            prod = _fourier_shift_batch(u_hat, freqs, s) * np.conj(
                _fourier_shift_batch(u_hat, freqs, -s))
        for j, F in enumerate(Fs):
            out[j] += np.sum(prod * np.moveaxis(F[..., keep[sl]], -1, 0))
    out *= g.x_cell * dual_volume(g)
    return out.real


def pure_state_kernel(u, eps, grid):
    """F2 W(x, K) = u(x - eps K/2) conj(u(x + eps K/2)) on the (x, K) grid."""
    n = grid.space_dims
    Kgrid = np.stack(np.meshgrid(*grid.K_axes(), indexing="ij"), axis=-1).reshape(-1, n)
    shifts = 0.5 * eps * Kgrid
    u_hat = sfft.fftn(np.asarray(u, dtype=complex))
    freqs = grid.x_freqs()
    out = np.empty(grid.x_points + (Kgrid.shape[0],), dtype=complex)
    for start in range(0, Kgrid.shape[0], 64):
        s = shifts[start:start + 64]
        minus = _fourier_shift_batch(u_hat, freqs, -s)
        plus = _fourier_shift_batch(u_hat, freqs, s)
        out[..., start:start + 64] = np.moveaxis(minus * np.conj(plus), 0, -1)
    return out.reshape(grid.shape)


def wigner_transform(u, eps, grid):
    """Wigner function of the pure state ``u`` sampled on ``grid`` (1D: direct construction)."""
    F = PhaseSpaceField(grid, pure_state_kernel(u, eps, grid), tag="WignerFunction",
                        eps=eps, domain="xK")
    return inverse_partial_fourier(F)


# ---------------------------------------------------------------------------
# serialization

def save_field(f, path):
    """Write ``path.bin`` (little-endian float64, complex interleaved) and ``path.json``."""
    path = Path(path)
    vals = np.ascontiguousarray(f.values)
    is_complex = np.iscomplexobj(vals)
    raw = vals.astype("<c16").view("<f8") if is_complex else vals.astype("<f8")
    path.with_suffix(".bin").write_bytes(raw.tobytes())
    meta = {"grid": f.grid.describe(), "tag": f.tag, "eps": f.eps, "domain": f.domain,
            "complex": bool(is_complex), "dtype": "<f8", "order": "C",
            "meta": f.meta}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path.with_suffix(".bin"), path.with_suffix(".json")


def load_field(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = PhaseSpaceGrid.from_description(meta["grid"])
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    if meta["complex"]:
        vals = raw.view("<c16").reshape(grid.shape).astype(complex)
    else:
        vals = raw.reshape(grid.shape).astype(float)
    return PhaseSpaceField(grid, vals.copy(), tag=meta["tag"], eps=meta["eps"],
                           domain=meta["domain"], meta=meta.get("meta", {}))
