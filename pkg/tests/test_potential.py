import numpy as np
import pytest
from hypothesis import given, strategies as st

from wlab.errors import UnboundedDerivative
from wlab.potential import (ExpRatioCutoff, PotentialField, default_cutoff, derivative_sup,
                            derivative_sup_upto, make_cutoff, tabulate)

BOX = [(-1.0, 1.0), (-1.0, 1.0)]


def test_cutoff_plateau_and_support():
    psi = default_cutoff()
    s = np.array([0.0, 0.25, 0.5, 1.0, 1.5])
    assert np.allclose(psi(s), [1, 1, 1, 0, 0])
    mid = np.linspace(0.5, 1.0, 101)
    assert np.all(np.diff(psi(mid)) <= 1e-15)


@pytest.mark.parametrize("name", ["bump-integral", "exp-ratio"])
def test_cutoff_derivative_matches_finite_difference(name):
    psi = make_cutoff(name)
    s = np.linspace(0.55, 0.95, 9)
    h = 1e-6
    fd = (psi(s + h) - psi(s - h)) / (2 * h)
    assert np.allclose(psi.derivative(s, 1), fd, atol=1e-6)


def test_line_potential_values():
    V = PotentialField(0.0)
    assert V.evaluate(np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert V.evaluate(np.array([0.3, 0.0])) == pytest.approx(0.7)
    # outside the cutoff support the potential vanishes
    assert V.evaluate(np.array([0.3, 1.2])) == 0.0
    assert V.evaluate(np.array([1.2, 0.0])) == 0.0


def test_theta_half_profile():
    V = PotentialField(0.5, space_dims=1)
    x = np.array([0.1, 0.2, 0.4])
    assert np.allclose(V.evaluate(x), 1 - x ** 1.5)


def test_force_vanishes_on_axis():
    V = PotentialField(0.0)
    g = V.gradient(np.array([[0.0, 0.2]]))
    assert g[0, 0] == 0.0


@pytest.mark.parametrize("theta,variant", [(0.0, "line"), (0.5, "line"), (0.3, "smooth")])
def test_gradient_matches_finite_difference(theta, variant):
    V = PotentialField(theta, variant)
    x = np.array([[0.2, 0.1], [-0.35, -0.4], [0.6, 0.3]])
    h = 1e-6
    g = V.gradient(x)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (V.evaluate(x + e) - V.evaluate(x - e)) / (2 * h)
        assert np.allclose(g[:, j], fd, atol=1e-6)


def test_point_variant_is_radial_near_origin():
    V = PotentialField(0.0, "point")
    a = V.evaluate(np.array([0.2, 0.0]))
    b = V.evaluate(np.array([0.0, 0.2]))
    c = V.evaluate(np.array([0.2 / np.sqrt(2), 0.2 / np.sqrt(2)]))
    assert a == pytest.approx(b) and a == pytest.approx(c)


def test_third_derivative_unbounded_on_axis():
    with pytest.raises(UnboundedDerivative):
        derivative_sup(PotentialField(0.0), 3, BOX)
    with pytest.raises(UnboundedDerivative):
        derivative_sup(PotentialField(0.5), 3, BOX)


def test_second_derivative_has_axis_atom_only_for_kink():
    assert derivative_sup(PotentialField(0.0), 2, BOX).distributional_atom
    assert not derivative_sup(PotentialField(0.0), 2, BOX, strip=0.1).distributional_atom


def test_theta_half_third_derivative_blows_up_like_power():
    V = PotentialField(0.5)
    a = V.partial(np.array([[0.01, 0.0]]), (3, 0))[0]
    b = V.partial(np.array([[0.0025, 0.0]]), (3, 0))[0]
    # |x1|^(theta-2) = |x1|^-1.5: moving 4x closer multiplies d^3 V by 8
    assert b / a == pytest.approx(8.0, rel=1e-9)
    assert derivative_sup(V, 3, BOX, strip=0.0025).value >= abs(b)


def test_smooth_variant_bounded_everywhere():
    V = PotentialField(0.0, "smooth")
    assert np.isfinite(derivative_sup_upto(V, 3, BOX))


def test_derivative_sup_dominates_samples(rng):
    V = PotentialField(0.5)
    strip = 0.05
    sup = derivative_sup(V, 2, BOX, strip).value
    x = rng.uniform(-1, 1, size=(4000, 2))
    x = x[np.abs(x[:, 0]) >= strip]
    vals = np.max([np.abs(V.partial(x, (a, 2 - a))) for a in range(3)], axis=0)
    assert vals.max() <= sup * (1 + 1e-9)


def test_tabulate_shape():
    V = PotentialField(0.0)
    s = np.linspace(-1, 1, 5)
    tab = tabulate(V, s, s)
    assert tab.shape == (25, 5)


def test_energy_formula():
    V = PotentialField(0.0)
    x, k = np.array([0.2, -0.1]), np.array([0.5, 1.0])
    assert V.energy(x, k) == pytest.approx(np.pi * 1.25 + V.evaluate(x) / (2 * np.pi))


@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), st.sampled_from([0.0, 0.25, 0.5, 0.9]))
def test_mirror_symmetry(x1, x2, theta):
    V = PotentialField(theta)
    a = V.evaluate(np.array([x1, x2]))
    b = V.evaluate(np.array([-x1, x2]))
    c = V.evaluate(np.array([x1, -x2]))
    assert a == pytest.approx(b, abs=1e-15) and a == pytest.approx(c, abs=1e-15)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_potential_bounded_in_unit_interval(x1, x2):
    v = PotentialField(0.0).evaluate(np.array([x1, x2]))
    assert 0.0 <= v <= 1.0


def test_exp_ratio_cutoff_is_alternative():
    assert isinstance(make_cutoff("exp-ratio"), ExpRatioCutoff)
    with pytest.raises(ValueError):
        make_cutoff("nope")
