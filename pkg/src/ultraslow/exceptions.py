"""Exception types raised by the numerical routines."""


class UltraslowError(Exception):
    """Base class for all errors raised by this package."""


class InvalidWeight(UltraslowError, ValueError):
    """The weight specification is malformed (negative values, bad support)."""


class NonIntegrable(UltraslowError):
    """Adaptive refinement of an alpha-integral did not settle."""


class ZeroMass(InvalidWeight):
    """The weight has (numerically) zero total mass."""


class BracketFailure(UltraslowError):
    """Bisection could not find a sign change."""


class QuadratureDivergence(UltraslowError):
    """An integral along the branch cut failed to converge."""


class NoConvergence(UltraslowError):
    """A time-marching solver produced non-finite values."""


class BelowValidity(UltraslowError, ValueError):
    """A decay envelope was evaluated below its validity threshold."""


class DegenerateFit(UltraslowError, ValueError):
    """Too few usable points for a least-squares fit."""


class NotSPD(UltraslowError):
    """An assembled stiffness matrix is not symmetric positive definite."""


class SolveFailure(UltraslowError):
    """A linear solve in the time-marching loop failed."""
