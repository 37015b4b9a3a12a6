"""Exception types raised by the numerical laboratory."""


class WlabError(Exception):
    """Base class; the CLI maps it to exit code 1."""


class UnboundedDerivative(WlabError):
    pass


class KernelUnderresolved(WlabError):
    pass


class ShiftOutOfDomain(WlabError):
    pass


class EpsilonTooLarge(WlabError):
    pass


class Underresolved(WlabError):
    pass


class DeconvolutionFailure(WlabError):
    pass


class InteractionIncomplete(WlabError):
    pass


class NumericalAssertionError(WlabError):
    """A post-condition check failed; the CLI maps it to exit code 2."""


class NonConvergent(Warning):
    pass


class BoundaryLeakWarning(Warning):
    pass
