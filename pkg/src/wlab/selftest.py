"""Fast checks of results that hold by construction (symmetry, formulas, contracts)."""
import numpy as np

from .classical import ParticleEnsemble, eta_pair, evolve_ensemble
from .experiments import classical_side_masses, exit_horizon, two_limits_demo
from .potential import PotentialField
from .states import (BumpProfile, InitialDataSpec, build_schedule, coherent_state,
                     toeplitz_quadrature)
from .transforms import PhaseSpaceGrid, norm


def _check(name, ok, detail):
    return {"name": name, "ok": bool(ok), "detail": detail}


def schedule_formula():
    s = build_schedule(0.0, eps=1e-200)
    expected = (-np.log(1e-200) / 4.0) ** -0.5
    err = abs(s.R - expected)
    return _check("schedule R at theta=0", err < 1e-14, f"|R - formula| = {err:.2e}")


def symmetric_split():
    V = PotentialField(0.0)
    spec = InitialDataSpec(BumpProfile.make("symmetric", 2), build_schedule(0.0, 0.01, 1.0))
    p, m, _ = classical_side_masses(spec, V, exit_horizon(spec), nodes=6)
    return _check("symmetric split", abs(p - 0.5) < 1e-3 and abs(m - 0.5) < 1e-3,
                  f"c+ = {p:.6f}, c- = {m:.6f}")


def pair_mirror():
    V = PotentialField(0.0)
    p = eta_pair(2.0, 1.0, V, (1e-2, 1e-3), 0.6, 1e-3)
    return _check("eta pair mirror symmetry", p.mirror_error < 1e-12,
                  f"mirror error {p.mirror_error:.2e}")


def free_flight():
    V = PotentialField(0.0, "free")
    ens = ParticleEnsemble(np.array([[0.3, -0.2]]), np.array([[0.5, 1.0]]), [1.0])
    out = evolve_ensemble(ens, V, 0.5, 1e-2)
    exact = np.array([0.3, -0.2]) + 2 * np.pi * 0.5 * np.array([0.5, 1.0])
    err = float(np.abs(out.x[0] - exact).max())
    return _check("free flight", err < 1e-12, f"position error {err:.2e}")


def zero_offset_two_limits():
    rep = two_limits_demo(0.0, (60, 61), quantum=False, nodes=6)
    s = [r["side_plus"] for r in rep.rows]
    return _check("two-limits with C=0", all(abs(v - 0.5) < 1e-3 for v in s), f"side masses {s}")


def coherent_dual_norm():
    eps = 0.015
    g = PhaseSpaceGrid(1, 2.0, 2.0, 256, 256)
    st = toeplitz_quadrature(InitialDataSpec(BumpProfile.make("symmetric", 1),
                                             build_schedule(0.0, eps, 1.0)), eps, 4)
    val = norm(st.field(g), "AlgAdual")
    return _check("dual algebra norm of a Toeplitz state", abs(val - 1.0) < 1e-4, f"{val:.8f}")


def coherent_normalized():
    x = np.linspace(-2, 2, 1024, endpoint=False)
    u = coherent_state([x], [0.1], [0.3], 0.02)
    n = float(np.sum(np.abs(u) ** 2) * (x[1] - x[0]))
    return _check("coherent state unit norm", abs(n - 1.0) < 1e-12, f"norm^2 = {n:.15f}")


CHECKS = (schedule_formula, free_flight, coherent_normalized, coherent_dual_norm,
          pair_mirror, symmetric_split, zero_offset_two_limits)


def run_all():
    out = []
    for fn in CHECKS:
        try:
            out.append(fn())
        except Exception as exc:  # a crash is a failure, reported by name
            out.append(_check(fn.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out
