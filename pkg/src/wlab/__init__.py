"""Numerical laboratory for semiclassical limits through a conical potential
singularity: Wigner transforms, Toeplitz states, Schrodinger and Liouville
solvers, and the experiments that compare them."""

__version__ = "0.1.0"

from ._accel import backend, set_backend  # noqa: E402,F401
from .errors import (DeconvolutionFailure, EpsilonTooLarge, InteractionIncomplete,  # noqa: E402,F401
                     KernelUnderresolved, NumericalAssertionError, ShiftOutOfDomain,
                     Underresolved, UnboundedDerivative, WlabError)
from .potential import PotentialField, default_cutoff, derivative_sup  # noqa: E402,F401
from .states import (BumpProfile, InitialDataSpec, MixedState, build_schedule,  # noqa: E402,F401
                     toeplitz_quadrature, toeplitz_sample)
from .transforms import PhaseSpaceField, PhaseSpaceGrid, norm, wigner_pairing  # noqa: E402,F401
