"""Fourier and normalization conventions shared by every module.

Fourier transform: f^(xi) = int exp(-2 pi i x xi) f(x) dx, so ordinary
frequencies (cycles per unit) appear in every exponent together with 2 pi.
"""
import numpy as np

TWO_PI = 2.0 * np.pi

# phase-space transport speed dx/dt = TRANSPORT * k
TRANSPORT = TWO_PI
# force scale dk/dt = -FORCE * grad V
FORCE = 1.0 / TWO_PI

# largest admissible eps for the concentration schedule: -log(eps^(1/4)) > 1
EPS_MAX = float(np.exp(-4.0))

# x1 half-width below which trajectories switch to fine sub-steps
R_GUARD = 1e-3
# number of sub-steps per macro step inside the guard strip
GUARD_SUBSTEPS = 64
# bisection tolerance for the force-jump crossing time
CROSSING_TOL = 1e-12


def fourier_exponent(x, xi):
    """exp(-2 pi i x xi), the forward kernel."""
    return np.exp(-1j * TWO_PI * x * xi)
