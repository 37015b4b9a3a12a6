import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from wlab.errors import InteractionIncomplete
from wlab.experiments import (ComparisonReport, SideIndicator, alternating_offset, barrier_momentum,
                              claim_row, claim_table, compare, default_test_functions,
                              exit_horizon, feasibility, figure1_gallery, gap_sweep,
                              grid_requirement, loglog_slope, monotone_within, split_masses,
                              two_limits_demo)
from wlab.potential import PotentialField
from wlab.states import BumpProfile, InitialDataSpec, build_schedule, pipeline, sample_initial
from wlab.transforms import PhaseSpaceGrid, norm

SCHED = build_schedule(0.0, 0.0125)


def _narrow(kind, offset=0.0, dx=0.2):
    # tiny momentum spread: no particle changes side, so c+ is the initial mass on x1 > 0
    return InitialDataSpec(BumpProfile.make(kind, 2), SCHED, X=1.1, offset=offset,
                           delta_x=dx, delta_k=0.002)


def test_one_sided_data_stays_on_its_side():
    spec = _narrow("one-sided")
    r = split_masses(spec, exit_horizon(spec), nodes=(16, 2, 2, 2))
    assert r.c_plus == pytest.approx(1.0, abs=1e-12)
    assert r.c_minus == pytest.approx(0.0, abs=1e-12)


def test_skewed_split_matches_half_line_integral():
    spec = _narrow("skewed", offset=0.05)
    r = split_masses(spec, exit_horizon(spec), nodes=(1024, 2, 2, 2))
    f = spec.bump.factors[0]
    oracle = quad(lambda t: spec.axis(0, t), 0.0, 0.05 + spec.dx * f.hi, limit=200)[0]
    # midpoint nodes resolve the jump at x1 = 0 to about one node spacing
    assert r.c_plus == pytest.approx(oracle, abs=5e-4)


@pytest.mark.parametrize("kind,offset", [("symmetric", 0.0), ("skewed", 0.02), ("two-lobe", -0.03)])
def test_split_masses_sum_to_one(kind, offset):
    spec = InitialDataSpec(BumpProfile.make(kind, 2), SCHED, X=1.5, offset=offset)
    r = split_masses(spec, exit_horizon(spec), nodes=6)
    assert abs(r.c_plus + r.c_minus - 1.0) <= 1e-10


def test_symmetric_split_is_even():
    spec = InitialDataSpec(BumpProfile.make("symmetric", 2), SCHED, X=1.5)
    r = split_masses(spec, exit_horizon(spec), nodes=6)
    assert r.c_plus == pytest.approx(0.5, abs=1e-12)


def test_split_before_exit_raises():
    spec = InitialDataSpec(BumpProfile.make("symmetric", 2), SCHED, X=1.5)
    with pytest.raises(InteractionIncomplete):
        split_masses(spec, 0.2, nodes=4)


def test_self_comparison_has_no_gap():
    spec = InitialDataSpec(BumpProfile.make("symmetric", 1), SCHED, offset=0.5)
    V = PotentialField(0.0, space_dims=1)
    phis = default_test_functions(spec, V, 0.3)
    reps = compare(spec, V, phis, 0.3, 8, self_compare=True)
    assert len(reps) == 5 * len(phis)
    assert max(r.gap for r in reps) <= 1e-8


def test_gap_sweep_requires_decreasing_eps():
    spec = InitialDataSpec(BumpProfile.make("symmetric", 1), SCHED)
    with pytest.raises(ValueError):
        gap_sweep(0.0, [1e-3, 1e-2], spec, None, 0.3, 4)


@given(q=st.floats(-10, 10), c=st.floats(-10, 10))
def test_report_gap_is_absolute_difference(q, c):
    r = ComparisonReport(0.01, 0.0, "a", q, c, {})
    s = ComparisonReport(0.01, 0.0, "a", c, q, {})
    assert r.gap == s.gap == abs(q - c)


@given(p=st.floats(0.2, 3.0), a=st.floats(0.1, 10.0))
def test_loglog_slope_recovers_power(p, a):
    eps = np.array([1e-2, 3e-3, 1e-3, 3e-4])
    assert loglog_slope(eps, a * eps ** p) == pytest.approx(p, abs=1e-9)


def test_monotone_within_slack():
    assert monotone_within([1.0, 1.1, 1.0])
    assert not monotone_within([1.0, 1.3])


@pytest.mark.parametrize("le", [-6.0, -7.0])
def test_claim_row_matches_grid_pipeline(le):
    s = build_schedule(0.0, log_eps=le, C_margin=1.0)
    spec = InitialDataSpec(BumpProfile.make("symmetric", 1), s, offset=1.2, delta_x=1.5, delta_k=0.8)
    g = PhaseSpaceGrid(1, 4.0, 4.0, 2048, 1024, x_center=(1.2,))
    F0 = sample_initial(spec, g)
    _, F2, F3 = pipeline(F0, s)
    row = claim_row(spec)
    l1 = norm(F3.with_values(F3.values - F0.values, tag="TestFunction"), "L1")
    l2 = norm(F2.with_values(F2.values - F3.values, tag="TestFunction"), "L2")
    assert 0.1 < row["L1_F3_minus_F0"] < 0.9
    assert row["L1_F3_minus_F0"] == pytest.approx(l1, rel=1e-9)
    assert row["L2_F2_minus_F3"] == pytest.approx(l2, rel=1e-9)
    assert row["H1_F3"] == pytest.approx(norm(F3, "H1"), rel=1e-9)
    assert row["H2_F3"] == pytest.approx(norm(F3, "H2"), rel=1e-9)


def test_claim_table_rows_and_validation():
    tab = claim_table(0.0, [-40.0, -80.0])
    assert len(tab.rows) == 2
    assert tab.l2_rowwise_ok()
    assert np.all(tab.column("R") > 0)
    with pytest.raises(ValueError):
        claim_table(0.0, [-80.0, -40.0])


def test_barrier_momentum_closed_form():
    # the axis potential peaks at 1, so pi K^2 = 1 / (2 pi) at the barrier
    assert barrier_momentum(PotentialField(0.0)) == pytest.approx(1.0 / (np.pi * np.sqrt(2.0)), rel=1e-9)


def test_gallery_turn_back_and_symmetry():
    gal = figure1_gallery([0.1, 0.5, 1.0])
    kb = gal.k_barrier
    for K in gal.K_list:
        assert gal.turned_back[K] == (K < kb)
        assert gal.pairs[K].mirror_error < 1e-12
        assert gal.pairs[K].converged
    assert gal.min_angle_separation() > 0


def test_alternating_offset_signs():
    assert alternating_offset(2.0, 80) > 0 > alternating_offset(2.0, 79)
    assert alternating_offset(2.0, 80) == pytest.approx(2.0 / np.sqrt(np.log(80)))


def test_two_limits_without_offset_is_even():
    rep = two_limits_demo(0.0, (60, 61), quantum=False, nodes=6)
    assert all(r["side_plus"] == pytest.approx(0.5, abs=1e-12) for r in rep.rows)
    with pytest.raises(ValueError):
        two_limits_demo(1.0, (61, 60), quantum=False)


def test_grid_requirement_formula():
    lp = grid_requirement(0.0, -5.0)
    s = build_schedule(0.0, log_eps=-5.0)
    T = 1.25 * 3.0 / (2 * np.pi)  # transit from x2 = -2 to 1 at speed 2 pi, plus 25%
    k = 1.0 + s.delta_k
    expected = np.log2((s.delta_x + 2 * np.pi * k * T + 1.0) * 4 * k / np.exp(-5.0))
    assert lp == pytest.approx(expected, rel=1e-12)


def test_feasibility_rows_grow_with_scale():
    rows = feasibility(0.0, [-5.0, -40.0, -400.0])
    lp = [r["log2_points"] for r in rows]
    assert lp[0] < lp[1] < lp[2]
    assert not any(r["feasible"] for r in rows[1:])


def test_side_indicator_complement():
    x = np.random.default_rng(1).uniform(-1, 1, (50, 2))
    p = SideIndicator("p", 1.0, 0.05)(x, x)
    m = SideIndicator("m", -1.0, 0.05)(x, x)
    assert np.allclose(p + m, 1.0, atol=1e-15)
