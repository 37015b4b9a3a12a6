import numpy as np
import pytest
from hypothesis import given, strategies as st

from wlab.classical import (ParticleEnsemble, default_zeta, eta_pair, evolve_ensemble, h2_bound,
                            integrate_trajectory, shadow_mass)
from wlab.errors import NonConvergent
from wlab.potential import PotentialField


def test_free_flight_is_exact():
    V = PotentialField(0.0, "free")
    ens = ParticleEnsemble([[0.3, -0.2], [1.5, 0.0]], [[0.5, 1.0], [-0.2, 0.1]], [0.5, 0.5])
    out = evolve_ensemble(ens, V, 0.7, 1e-2)
    assert np.allclose(out.x, ens.x + 2 * np.pi * 0.7 * ens.k, atol=1e-13)
    assert np.array_equal(out.k, ens.k)
    assert out.time == pytest.approx(0.7)


def test_smooth_energy_drift_fourth_order():
    V = PotentialField(0.0, "smooth")
    d = [integrate_trajectory([0.2, -1.2], [0.1, 0.6], V, 1.0, h).energy_drift(V)
         for h in (2e-3, 1e-3, 5e-4)]
    assert d[-1] < 1e-9
    assert np.log2(d[0] / d[1]) > 3.5 and np.log2(d[1] / d[2]) > 3.5


@pytest.mark.parametrize("theta", [0.0, 0.5])
def test_line_energy_drift_off_axis(theta):
    # a trajectory that stays on one side of the kink
    V = PotentialField(theta)
    tr = integrate_trajectory([0.4, -1.5], [0.05, 0.5], V, 1.0, 1e-3)
    assert np.all(tr.X[:, 0] > 0)
    assert tr.energy_drift(V) < 1e-8


def test_eta_pair_mirror_and_convergence():
    V = PotentialField(0.0)
    p = eta_pair(2.0, 1.0, V, (1e-2, 1e-3, 1e-4), 1.0, 1e-3)
    assert p.mirror_error < 1e-12
    assert p.converged and np.all(np.diff(p.increments) < 0)
    assert p.exit_angle > 0
    assert p.plus.X[-1, 0] > 0 > p.minus.X[-1, 0]


def test_eta_pair_validates_list():
    V = PotentialField(0.0)
    with pytest.raises(ValueError):
        eta_pair(2.0, 1.0, V, (1e-3, 1e-2), 1.0)
    with pytest.raises(ValueError):
        eta_pair(2.0, 1.0, V, (1e-3, 1e-7), 1.0)


def test_eta_pair_warns_when_increments_grow():
    # in free flight the increments are the eta gaps themselves
    V = PotentialField(0.0, "free")
    with pytest.warns(NonConvergent):
        p = eta_pair(2.0, 1.0, V, (1e-2, 9e-3, 1e-3), 0.5, 1e-2)
    assert not p.converged
    assert p.increments == pytest.approx([1e-3, 8e-3], rel=1e-9)


def test_side_masses_and_mirror():
    ens = ParticleEnsemble([[0.2, 0.0], [-0.1, 0.3], [0.0, 0.5]],
                           [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]], [0.2, 0.5, 0.3])
    assert ens.side_masses() == pytest.approx((0.2, 0.5, 0.3))
    m = ens.mirrored().side_masses()
    assert m == pytest.approx((0.5, 0.2, 0.3))


def test_ensemble_rejects_bad_input():
    with pytest.raises(ValueError):
        ParticleEnsemble([[0.0, 0.0]], [[0.0, 0.0]], [-1.0])
    with pytest.raises(ValueError):
        ParticleEnsemble([[0.0, 0.0]], [[0.0]], [1.0])


def test_h2_bound_log_and_overflow():
    V = PotentialField(0.0, "smooth")
    region = [(-1.0, 1.0)] * 2
    a = h2_bound(V, region, 0.5, 3.0, C1=2.0)
    b = h2_bound(V, region, 0.5, 3.0, C1=2.0, log=True)
    assert np.log(a) == pytest.approx(b, rel=1e-12)
    big = h2_bound(V, region, 1e6, 3.0, log=True)
    assert np.isfinite(big)
    assert h2_bound(V, region, 1e6, 3.0) == np.inf


def test_shadow_infinite_threshold_is_empty():
    V = PotentialField(0.0)
    ens = ParticleEnsemble([[0.01, -1.5]], [[0.0, 0.5]], [1.0])
    assert shadow_mass(V, np.inf, 1.0, ens) == 0.0


def test_shadow_counts_axis_crossings_only():
    V = PotentialField(0.0)
    away = ParticleEnsemble([[0.5, -1.2]], [[0.3, 0.4]], [1.0])
    across = ParticleEnsemble([[0.05, 0.0]], [[-0.3, 0.0]], [1.0])
    z = default_zeta(-40.0)
    assert shadow_mass(V, z, 1.0, away) <= 1e-6
    assert shadow_mass(V, z, 1.0, across) == pytest.approx(1.0)


def test_default_zeta():
    assert default_zeta(-30.0) == 900.0


@given(x1=st.floats(-0.9, 0.9), x2=st.floats(-0.9, 0.9), k1=st.floats(-0.5, 0.5),
       k2=st.floats(-0.5, 0.5))
def test_smooth_flow_is_reversible(x1, x2, k1, k2):
    V = PotentialField(0.0, "smooth")
    ens = ParticleEnsemble([[x1, x2]], [[k1, k2]], [1.0])
    fwd = evolve_ensemble(ens, V, 0.3, 1e-3)
    back = fwd.copy()
    back.k *= -1
    back = evolve_ensemble(back, V, 0.3, 1e-3)
    assert np.allclose(back.x, ens.x, atol=1e-9)
    assert np.allclose(-back.k, ens.k, atol=1e-9)


@given(w=st.lists(st.floats(0.0, 5.0), min_size=1, max_size=8))
def test_evolution_preserves_weights(w):
    n = len(w)
    rng = np.random.default_rng(n)
    ens = ParticleEnsemble(rng.uniform(-1, 1, (n, 2)), rng.uniform(-1, 1, (n, 2)), w)
    out = evolve_ensemble(ens, PotentialField(0.5), 0.2, 1e-2)
    assert np.array_equal(out.weights, ens.weights)
    assert out.total_weight() == pytest.approx(sum(w))
