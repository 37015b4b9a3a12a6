"""Optional numba acceleration.

Set ``WLAB_DISABLE_NUMBA=1`` to force the pure-numpy code paths even when
numba is importable.  The flag is read once at import time; tests that need
to switch paths call :func:`set_backend`.
"""
import os
import warnings

_FALSY = ("", "0", "false", "no", "off")

# the bundled TBB is too old for numba; silence its one-time notice
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _wrap(fn):
            return fn
        return _wrap

    prange = range

USE_NUMBA = HAVE_NUMBA and os.environ.get("WLAB_DISABLE_NUMBA", "0").lower() in _FALSY


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` kernels at runtime."""
    global USE_NUMBA
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        USE_NUMBA = True
    elif name == "numpy":
        USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend():
    return "numba" if USE_NUMBA else "numpy"
