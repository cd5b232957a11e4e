"""Exception types shared across the package."""


class ResonanceLabError(Exception):
    """Base class for all package errors."""


class InvalidParameter(ResonanceLabError, ValueError):
    """A parameter violates an operation's precondition."""


class OriginSingular(ResonanceLabError, ValueError):
    """Gradient requested inside the exclusion ball of a non-smooth symbol."""


class UnsupportedMode(ResonanceLabError, ValueError):
    """Requested extraction mode is not available for this dimension."""


class GridMismatch(ResonanceLabError, ValueError):
    """Fields or symbols live on incompatible grids."""


class SolverDiverged(ResonanceLabError, ArithmeticError):
    """A non-finite value appeared during time stepping."""
