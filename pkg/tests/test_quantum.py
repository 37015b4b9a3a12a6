import numpy as np
import pytest

from oracles import (EPS, GRID, T_END, initial_states, oracle_potential, schrodinger_route,
                     wigner_route)
from wlab.errors import Underresolved
from wlab.potential import PotentialField
from wlab.quantum import (PureState, QuantumRun, SpatialGrid, SplitStep, check_resolution, default_dt,
                          evolve_mixed, schrodinger_step, wigner_solver_1d)
from wlab.states import BumpProfile, InitialDataSpec, build_schedule, coherent_state, toeplitz_quadrature
from wlab.transforms import PhaseSpaceField, wigner_transform


def test_split_step_conserves_norm_each_step():
    V = PotentialField(0.0)
    g = SpatialGrid((2.0, 2.0), (128, 128))
    u = coherent_state(g.axes(), [0.1, -0.5], [0.2, 0.6], 0.05)
    step = SplitStep(V, g, 0.05, 1e-3)
    n0 = np.sum(np.abs(u) ** 2)
    for _ in range(20):
        u = step(u)
        assert abs(np.sum(np.abs(u) ** 2) - n0) <= 1e-12 * n0


def test_free_packet_spreads_like_closed_form():
    eps, t = 0.02, 0.3
    V = PotentialField(0.0, "free", space_dims=1)
    g = SpatialGrid((4.0,), (2048,))
    x = g.axes()[0]
    u = coherent_state([x], [-0.5], [0.4], eps)
    u = SplitStep(V, g, eps, t / 100)(u, 100)
    rho = np.abs(u) ** 2 * g.cell
    mean = np.sum(rho * x)
    var = np.sum(rho * (x - mean) ** 2)
    # |u|^2 variance eps/(4 pi) grows by (pi eps) t^2; centre moves at 2 pi k0
    assert mean == pytest.approx(-0.5 + 2 * np.pi * 0.4 * t, abs=1e-10)
    assert var == pytest.approx(eps / (4 * np.pi) + np.pi * eps * t * t, rel=1e-9)


def test_batched_steps_equal_single():
    V = PotentialField(0.5, space_dims=1)
    g = SpatialGrid((2.0,), (256,))
    x = g.axes()[0]
    a = coherent_state([x], [0.2], [-0.3], 0.05)
    b = coherent_state([x], [-0.4], [0.5], 0.05)
    step = SplitStep(V, g, 0.05, 2e-3)
    both = step(np.stack([a, b]), 10)
    assert np.allclose(both[0], step(a, 10), atol=1e-14)
    assert np.allclose(both[1], step(b, 10), atol=1e-14)


def test_schrodinger_step_resolution_check():
    g = SpatialGrid((2.0,), (64,))
    st = PureState(g, coherent_state(g.axes(), [0.0], [0.0], 0.01), 0.01)
    with pytest.raises(Underresolved):
        schrodinger_step(st, PotentialField(0.0, space_dims=1), 1e-3, k_max=1.0)
    with pytest.raises(Underresolved):
        check_resolution(g, 0.01, 1.0)


def test_quantum_run_validates_snapshots():
    V = PotentialField(0.0)
    QuantumRun(V, 0.01, 1.0, (0.0, 0.5, 1.0))
    with pytest.raises(ValueError):
        QuantumRun(V, 0.03, 1.0, (0.0, 0.5, 1.0))
    with pytest.raises(ValueError):
        QuantumRun(V, 0.01, 1.0, (0.5, 0.25))


def test_default_dt_divides_quarters():
    dt = default_dt(0.01, 0.6)
    n = 0.15 / dt
    assert abs(n - round(n)) < 1e-9 and dt <= 0.6 / 2000 + 1e-15


def test_wigner_solver_preserves_l2():
    V = oracle_potential()
    x = GRID.x_axes()[0]
    W0 = wigner_transform(initial_states(x)[0], EPS, GRID)
    out = wigner_solver_1d(W0, V, EPS, T_END / 40, T_END)
    l2 = np.asarray(out.l2)
    assert np.ptp(l2) <= 1e-12 * 40 * l2[0]


def test_wigner_solver_rejects_coarse_grid():
    from wlab.transforms import PhaseSpaceGrid
    g = PhaseSpaceGrid(1, 3.0, 1.5, 64, 32)
    W0 = PhaseSpaceField(g, np.zeros(g.shape), tag="WignerFunction")
    with pytest.raises(Underresolved):
        wigner_solver_1d(W0, oracle_potential(), EPS, 0.01, 0.04)


def test_wigner_equation_matches_schrodinger_single_state():
    V = oracle_potential()
    x = GRID.x_axes()[0]
    u = initial_states(x)[0]
    snaps = (0.0, T_END)
    a = schrodinger_route(u, V, snaps)
    b, _ = wigner_route(u, V, snaps)
    assert np.abs(a - b).max() < 1e-5


def test_wigner_kick_sign_matters():
    # conjugating the potential kick must spoil the agreement
    V = oracle_potential()
    x = GRID.x_axes()[0]
    u = initial_states(x)[0]
    snaps = (0.0, T_END)
    a = schrodinger_route(u, V, snaps)
    b, _ = wigner_route(u, V, snaps, kick_sign=-1.0)
    assert np.abs(a - b).max() > 1e-2


def test_evolve_mixed_trace_and_free_pairing():
    from wlab.experiments import GaussianBump, TestFunctionSet, atom_grid
    eps = 0.01
    V = PotentialField(0.0, "free", space_dims=1)
    spec = InitialDataSpec(BumpProfile.make("symmetric", 1), build_schedule(0.0, eps))
    state = toeplitz_quadrature(spec, eps, 4)
    T = 0.2
    sgrid, _ = atom_grid(state, V, T)
    phis = TestFunctionSet([GaussianBump("a", (0.3,), (0.1,), 0.3, 0.3)])
    run = QuantumRun(V, T / 40, T, (0.0, T))
    res = evolve_mixed(state, V, run, phis.sample(sgrid), sgrid)
    assert np.abs(res["trace"] - 1).max() < 1e-10
    assert res["pairings"].shape == (2, 1)
