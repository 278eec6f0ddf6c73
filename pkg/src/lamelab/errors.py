"""Exception types shared across the package.

All validation failures raise subclasses of ValueError so that callers can
trap bad input uniformly; iteration and bracketing failures are RuntimeErrors
because they signal that a computation, not its input, went wrong.
"""


class InvalidParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class EllipticityError(InvalidParameterError):
    """The Lame parameter violates strong ellipticity (alpha <= -1)."""


class SingularPointError(ValueError):
    """Evaluation requested at the pole of a fundamental matrix."""


class NonCompactSupportError(ValueError):
    """An integrand does not vanish at the outer radius of the grid."""


class DomainError(ValueError):
    """A geometric precondition on a domain or mask is violated."""


class ResolutionExceededError(DomainError):
    """A requested refinement level is finer than the stored geometry."""


class InsufficientLevelsError(ValueError):
    """Too few dyadic levels for a meaningful fit."""


class BracketFailureError(RuntimeError):
    """A root scan found no sign change in the search window."""


class NoConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap above tolerance."""
