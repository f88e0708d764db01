"""Exception types shared across the package."""


class LiouvilleError(Exception):
    """Base class for all package errors."""


class InputError(LiouvilleError):
    """Rejected input: wrong shape, non-finite data, out-of-range parameter."""


class LinearSolveError(LiouvilleError):
    """A required linear system is singular or badly conditioned."""


class UndefinedRegionError(LiouvilleError):
    """Region classification is undefined (e.g. rho = 0)."""


class NoRealRootError(LiouvilleError):
    """The height quadratic has a negative discriminant."""


class DomainError(LiouvilleError):
    """Argument outside the validity domain of the requested operation."""


class OutOfRangeError(DomainError):
    """Radius outside the computed profile range."""


class IntegrationError(LiouvilleError):
    """The ODE integrator failed; carries the last radius that was reached."""

    def __init__(self, message, last_radius=None):
        super().__init__(message)
        self.last_radius = last_radius


class BlowupError(IntegrationError):
    """A solution component exceeded the overflow guard."""


class ExtractionError(LiouvilleError):
    """Tail extraction from a profile did not converge."""


class NonConvergenceError(LiouvilleError):
    """Iterative solve exceeded its step budget; carries the best iterate."""

    def __init__(self, message, best=None, best_residual=None):
        super().__init__(message)
        self.best = best
        self.best_residual = best_residual


class SingularityError(DomainError):
    """Evaluation requested at (or too close to) a singular point."""


class GeometryError(LiouvilleError):
    """Inconsistent geometric data (coincident points, oversized balls...)."""


class WrongRegimeError(LiouvilleError):
    """A leading-term formula was requested outside its parameter regime."""
