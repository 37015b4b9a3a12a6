"""Shared independent routes used by several test modules."""
import numpy as np

from wlab.potential import PotentialField
from wlab.quantum import QuantumRun, SpatialGrid, SplitStep, WignerSplitStep
from wlab.states import coherent_state
from wlab.transforms import PhaseSpaceField, PhaseSpaceGrid, sample, wigner_pairings, wigner_transform

EPS = 0.05
T_END = 0.5
STEPS = 200
GRID = PhaseSpaceGrid(1, 3.0, 1.5, 512, 128)


def initial_states(x):
    """Three normalized 1D states: two coherent packets and a two-packet superposition."""
    a = coherent_state([x], [-0.8], [0.45], EPS)
    b = coherent_state([x], [0.6], [-0.3], EPS)
    c = coherent_state([x], [-0.3], [0.35], EPS) + coherent_state([x], [0.2], [0.1], EPS)
    h = x[1] - x[0]
    return [s / np.sqrt(np.sum(np.abs(s) ** 2) * h) for s in (a, b, c)]


def test_functions(grid=GRID):
    def bump(x0, k0, sx, sk):
        return sample(grid, lambda x, k: np.exp(-(x[..., 0] - x0) ** 2 / (2 * sx * sx)
                                               - (k[..., 0] - k0) ** 2 / (2 * sk * sk)),
                      tag="TestFunction")
    return [bump(0.0, 0.0, 0.4, 0.3), bump(0.5, 0.3, 0.3, 0.25), bump(-0.6, -0.2, 0.35, 0.3)]


def schrodinger_route(u0, V, snapshots):
    sg = SpatialGrid(GRID.x_half, GRID.x_points, GRID.x_center)
    dt = T_END / STEPS
    step = SplitStep(V, sg, EPS, dt)
    run = QuantumRun(V, dt, T_END, snapshots)
    phis = test_functions()
    u, out = u0.astype(complex), []
    for n in run.step_counts():
        if n:
            u = step(u, int(n))
        out.append(wigner_pairings(u, EPS, phis))
    return np.array(out)


def wigner_route(u0, V, snapshots, kick_sign=1.0):
    W = wigner_transform(u0, EPS, GRID).values.astype(complex)
    dt = T_END / STEPS
    step = WignerSplitStep(V, GRID, EPS, dt)
    if kick_sign < 0:
        step.kick = np.conj(step.kick)
    run = QuantumRun(V, dt, T_END, snapshots)
    phis = test_functions()
    out, l2 = [], []
    for n in run.step_counts():
        if n:
            W = step(W, int(n))
        f = PhaseSpaceField(GRID, W, tag="WignerFunction", eps=EPS)
        out.append([f.pair(p) for p in phis])
        l2.append(np.sqrt(np.sum(np.abs(W) ** 2) * GRID.cell_volume))
    return np.array(out), np.array(l2)


def oracle_potential():
    return PotentialField(0.5, "line", space_dims=1)
