"""Headline acceptance criteria, one test each, at their stated tolerances.

Every test records a single ``CRITERION n PASS|FAIL`` line before asserting;
the lines are printed as they happen and again in the terminal summary.  Criteria 4, 7 and 9 run quantum
evolutions and take several minutes each.
"""
import time

import numpy as np
import pytest

from oracles import (EPS, GRID, STEPS, T_END, initial_states, oracle_potential,
                     schrodinger_route, wigner_route)
from wlab.classical import default_zeta, shadow_mass
from wlab.experiments import (atom_grid, claim_table, default_test_functions, exit_horizon,
                              feasibility, figure1_gallery, gap_sweep, monotone_within,
                              split_masses, two_limits_demo, TestFunctionSet, GaussianBump)
from wlab.figures import figure1_svg
from wlab.potential import PotentialField
from wlab.quantum import QuantumRun, SpatialGrid, SplitStep, WignerSplitStep, evolve_mixed
from wlab.states import (BumpProfile, InitialDataSpec, build_schedule, coherent_state,
                         default_horizon, toeplitz_quadrature, toeplitz_sample)
from wlab.transforms import PhaseSpaceGrid, norm, wigner_transform

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

LOG_EPS_LIST = [-40.0 * j for j in range(1, 11)]  # e^-40 ... e^-400


CRITERIA = []


@pytest.fixture
def report(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def _report(n, ok, detail, t0):
        line = f"CRITERION {n:>2} {'PASS' if ok else 'FAIL'} ({time.perf_counter() - t0:.0f}s): {detail}"
        CRITERIA.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        assert ok, line
    return _report


def _max_step_drift(norms):
    n = np.asarray(norms)
    return float(np.abs(np.diff(n)).max() / n[0])


# diffraction off the kink sends a faint high-momentum tail to the box edges;
# the periodic split step stays unitary regardless
@pytest.mark.filterwarnings("ignore::wlab.errors.BoundaryLeakWarning")
def test_criterion_01_conservation(report):
    t0 = time.perf_counter()
    # Schrodinger split step in two space dimensions
    V = PotentialField(0.0)
    g = SpatialGrid((2.0, 2.0), (256, 256))
    u = coherent_state(g.axes(), [0.05, -0.4], [0.1, 0.5], 0.02)
    step = SplitStep(V, g, 0.02, 1e-3)
    norms = [np.sum(np.abs(u) ** 2)]
    for _ in range(50):
        u = step(u)
        norms.append(np.sum(np.abs(u) ** 2))
    schr = _max_step_drift(norms)
    # one-dimensional Wigner solver
    W = wigner_transform(initial_states(GRID.x_axes()[0])[2], EPS, GRID).values.astype(complex)
    wstep = WignerSplitStep(oracle_potential(), GRID, EPS, T_END / STEPS)
    l2 = [np.sqrt(np.sum(np.abs(W) ** 2))]
    for _ in range(50):
        W = wstep(W)
        l2.append(np.sqrt(np.sum(np.abs(W) ** 2)))
    wig = _max_step_drift(l2)
    # trace of a mixed state over [0, T]
    eps, T = 0.01, 0.2
    V1 = PotentialField(0.0, space_dims=1)
    spec = InitialDataSpec(BumpProfile.make("symmetric", 1), build_schedule(0.0, eps), offset=0.3)
    state = toeplitz_quadrature(spec, eps, 4)
    sgrid, _ = atom_grid(state, V1, T)
    phis = TestFunctionSet([GaussianBump("a", (0.3,), (0.0,), 0.3, 0.3)]).sample(sgrid)
    res = evolve_mixed(state, V1, QuantumRun(V1, T / 80, T), phis, sgrid)
    tr = float(np.abs(res["trace"] - res["trace"][0]).max())
    ok = schr <= 1e-12 and wig <= 1e-12 and tr <= 1e-10
    report(1, ok, f"Schrodinger {schr:.1e}/step, Wigner {wig:.1e}/step (limit 1e-12); "
                  f"trace drift {tr:.1e} (limit 1e-10)", t0)


def test_criterion_02_toeplitz_positivity(report):
    t0 = time.perf_counter()
    eps = 0.015
    spec = InitialDataSpec(BumpProfile.make("symmetric", 1), build_schedule(0.0, eps))
    g = PhaseSpaceGrid(1, 2.0, 2.0, 256, 256)
    x = g.x_axes()[0]
    rng = np.random.default_rng(7)
    worst_q, worst_eig, worst_n = np.inf, np.inf, 0.0
    for seed in range(10):
        st = toeplitz_sample(spec, eps, 32, seed=seed)
        rho = st.kernel_matrix(x)
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(rho).min()))
        for _ in range(10):
            v = rng.normal(size=x.size) + 1j * rng.normal(size=x.size)
            worst_q = min(worst_q, float(np.real(v.conj() @ rho @ v)))
        worst_n = max(worst_n, abs(norm(st.field(g), "AlgAdual") - 1.0))
    ok = worst_q >= -1e-10 and worst_eig >= -1e-10 and worst_n <= 1e-4
    report(2, ok, f"min quadratic form {worst_q:.3e}, min eigenvalue {worst_eig:.1e} (>= -1e-10); "
                  f"max |dual norm - 1| {worst_n:.1e} (<= 1e-4)", t0)


def test_criterion_03_oracle_equivalence(report):
    t0 = time.perf_counter()
    V = oracle_potential()
    snaps = tuple(T_END * np.arange(5) / 4)
    worst = 0.0
    for u in initial_states(GRID.x_axes()[0]):
        a = schrodinger_route(u, V, snaps)
        b, _ = wigner_route(u, V, snaps)
        worst = max(worst, float(np.abs(a - b).max()))
    report(3, worst <= 1e-5, f"max pairing difference {worst:.2e} over 3 states x 3 test functions "
                             "x 5 times (limit 1e-5)", t0)


def test_criterion_04_smooth_rate(report):
    t0 = time.perf_counter()
    T = 0.25
    eps_list = [1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5]
    tmpl = InitialDataSpec(BumpProfile.make("symmetric", 1), build_schedule(0.0, 1e-2, T=T),
                           offset=0.75, delta_x=0.7, delta_k=0.7)
    _, summary = gap_sweep(0.0, eps_list, tmpl, lambda spec, V: default_test_functions(spec, V, T),
                           T, nodes=8, variant="smooth")
    slopes = {k: v["slope"] for k, v in summary["rows"].items()}
    bad = {k: s for k, s in slopes.items() if not abs(s - 1.0) <= 0.3}
    detail = f"{len(slopes) - len(bad)}/{len(slopes)} slopes within 1 +- 0.3"
    if bad:
        detail += "; outside: " + ", ".join(f"(t={t:g}, {p}) {s:.3f}" for (t, p), s in bad.items())
    report(4, not bad, detail, t0)


def test_criterion_05_trend(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for theta in (0.0, 0.5):
        rows = feasibility(theta, LOG_EPS_LIST)
        usable = [r["log_eps"] for r in rows if r["feasible"]]
        lp = [r["log2_points"] for r in rows]
        if len(usable) < 2:
            ok = False
            lines.append(f"theta={theta:g}: {len(usable)} schedule-feasible points (grid needs "
                         f"2^{min(lp):.0f}..2^{max(lp):.0f} points per axis, cap 2^11)")
            continue
        T = default_horizon(2.0, 1.0)
        tmpl = InitialDataSpec(BumpProfile.make("symmetric", 2), build_schedule(theta, T=T, log_eps=usable[0]))
        _, summary = gap_sweep(theta, [float(np.exp(v)) for v in usable], tmpl,
                               lambda spec, V: default_test_functions(spec, V, T), T, nodes=(2, 2, 1, 1))
        mono = all(monotone_within(v["gaps"]) for v in summary["rows"].values())
        ok &= mono
        lines.append(f"theta={theta:g}: {len(usable)} points, monotone={mono}")
    report(5, ok, "; ".join(lines), t0)


def test_criterion_06_claim_table(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for theta in (0.0, 0.5):
        tab = claim_table(theta, LOG_EPS_LIST, T=default_horizon(2.0, 1.0))
        l1, l2 = tab.column("L1_F3_minus_F0"), tab.column("L2_F2_minus_F3")
        checks = {
            "L1 decreasing": tab.decreasing("L1_F3_minus_F0"),
            "L2 decreasing": tab.decreasing("L2_F2_minus_F3"),
            "L1 under envelope": bool(np.all(l1 <= tab.column("L1_envelope"))),
            "L2 under envelope": tab.l2_rowwise_ok(),
            "L1 constant within x2": tab.constant_spread("L1_constant") <= 2.0,
            "L2 constant within x2": tab.constant_spread("L2_constant") <= 2.0,
        }
        ok &= all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        lines.append(f"theta={theta:g}: L1 {l1.min():.3g}..{l1.max():.3g}, L2 {l2.min():.3g}..{l2.max():.3g}, "
                     f"failed: {', '.join(failed) or 'none'}")
    report(6, ok, "; ".join(lines), t0)


def test_criterion_07_splitting(report):
    t0 = time.perf_counter()
    spec = InitialDataSpec(BumpProfile.make("symmetric", 2), build_schedule(0.0, 0.0125))
    T = exit_horizon(spec)
    r = split_masses(spec, T, nodes=8, quantum=True, quantum_nodes=(2, 2, 1, 1), dt=T / 40)
    q = r.quantum_c_plus / (r.quantum_c_plus + r.quantum_c_minus)
    ok = (abs(r.c_plus - 0.5) <= 1e-3 and abs(r.c_minus - 0.5) <= 1e-3 and abs(q - 0.5) <= 0.05)
    report(7, ok, f"eps=0.0125 T={T:.4f}: classical ({r.c_plus:.6f}, {r.c_minus:.6f}); "
                  f"quantum side mass {q:.10f}", t0)


def test_criterion_08_figure(report, tmp_path):
    t0 = time.perf_counter()
    gal = figure1_gallery([0.1, 0.3, 0.5, 1.0, 1.5])
    mirror = max(p.mirror_error for p in gal.pairs.values())
    mono = all(p.converged and np.all(np.diff(p.increments) < 0) for p in gal.pairs.values())
    diverge = all(abs(p.plus.X[-1, 0] - p.minus.X[-1, 0]) > 10 * abs(p.plus.X[0, 0] - p.minus.X[0, 0])
                  for p in gal.pairs.values())
    path = figure1_svg(gal, str(tmp_path / "figure1.svg"))
    with open(path, encoding="utf-8") as fh:
        svg = "<svg" in fh.read()
    ok = mirror <= 1e-12 and mono and diverge and svg
    report(8, ok, f"{len(gal.K_list)} K values, mirror error {mirror:.1e}, increments decreasing={mono}, "
                  f"diverging={diverge}, svg={svg}", t0)


def test_criterion_09_two_limits(report):
    t0 = time.perf_counter()
    rep = two_limits_demo(2.0, (77, 78, 79, 80), nodes=12, quantum=True, quantum_terms=2, steps=40)
    side = [r["side_plus"] for r in rep.rows]
    qrows = [r for r in rep.rows if np.isfinite(r["quantum_side_plus"])]
    q_agree = all((r["quantum_side_plus"] - 0.5) * (r["side_plus"] - 0.5) > 0 for r in qrows)
    ok = rep.alternates and rep.separation >= 0.8 and q_agree
    qtxt = ", ".join(f"m={r['m']}: {r['quantum_side_plus']:.4f} vs {r['atoms_side_plus']:.4f} "
                     "classical on the same atoms" for r in qrows)
    report(9, ok, f"side masses {np.round(side, 4).tolist()}, separation {rep.separation:.3f} (>= 0.8), "
                  f"quantum {qtxt}", t0)


def test_criterion_10_shadow(report):
    t0 = time.perf_counter()
    T = default_horizon(2.0, 1.0)
    lines, ok = [], True
    for theta in (0.0, 0.5):
        V = PotentialField(theta)
        m = []
        for le in LOG_EPS_LIST:
            spec = InitialDataSpec(BumpProfile.make("symmetric", 2), build_schedule(theta, T=T, log_eps=le))
            m.append(shadow_mass(V, default_zeta(le), T, spec, nodes=12))
        mono = bool(np.all(np.diff(m) <= 0))
        ok &= mono
        lines.append(f"theta={theta:g} masses {np.round(m, 4).tolist()} non-increasing={mono}")
    # data that moves away from the axis on one side never reaches the singular set
    s = build_schedule(0.0, T=T, log_eps=-40.0)
    away = InitialDataSpec(BumpProfile.make("symmetric", 2), s, offset=0.6, k1=0.3, delta_x=0.3, delta_k=0.1)
    outside = shadow_mass(PotentialField(0.0), default_zeta(-40.0), T, away, nodes=12)
    ok &= outside <= 1e-6
    lines.append(f"launched outside: {outside:.1e} (<= 1e-6)")
    report(10, ok, "; ".join(lines), t0)
