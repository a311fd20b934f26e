"""Exception types shared across the solver modules."""


class TwoGridError(Exception):
    """Base class for all errors raised by this package."""


class NonConvergence(TwoGridError):
    """An iterative geometric query (interface projection) failed to converge."""


class EmptyTube(TwoGridError):
    """No coarse node fell inside the refinement tube."""


class TubeTooWide(TwoGridError):
    """The refinement tube reaches too close to the domain boundary."""


class UnsupportedRatio(TwoGridError):
    """Requested a tabulated transition stencil for a ratio that is not tabulated."""


class InconsistentSystem(TwoGridError):
    """A stencil derivation system has no (unique) solution."""


class SignViolation(TwoGridError):
    """A stencil could not be given the sign pattern needed for monotonicity."""


class DegenerateDenominator(TwoGridError):
    """An interface-fitted stencil denominator vanished (to working tolerance)."""


class MultipleCrossings(TwoGridError):
    """A single stencil arm crosses the interface more than once."""


class SingularMatrix(TwoGridError):
    """The assembled linear system is singular."""


class NoConvergence(TwoGridError):
    """The linear solve did not reach the requested residual tolerance."""


class UnknownProblem(TwoGridError):
    """No registered benchmark problem under that name."""


class BadParams(TwoGridError):
    """Problem or grid parameters are malformed or out of range."""


class NoExactSolution(TwoGridError):
    """Error measurement was requested for a problem without an exact solution."""
