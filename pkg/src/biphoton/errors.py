"""Exception types shared across the package."""


class BiphotonError(Exception):
    """Base class for all package-specific errors."""


class QuadratureError(BiphotonError):
    """Velocity average did not converge within the node budget.

    Carries the last two quadrature estimates so the caller can judge
    how far from convergence the ladder stopped.
    """

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class GridTooNarrowError(BiphotonError):
    """Amplitude has not decayed below the tail threshold at the grid ends."""


class ResolutionError(BiphotonError):
    """Doubling the grid still changes the curve beyond the tolerance."""


class CrossingError(BiphotonError):
    """Half-maximum crossing could not be located on the sampled curve."""


class FitError(BiphotonError):
    """Nonlinear fit failed; ``best`` holds the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class LowContrastError(BiphotonError):
    """Histogram peak does not clear the required multiple of the baseline."""


class InsufficientEventsError(BiphotonError):
    """Too few counts for a meaningful correlation estimate."""


class RankDeficientError(BiphotonError):
    """Degenerate input points; the scaling model is not identifiable."""


class ConfigError(BiphotonError):
    """Configuration file is malformed, has unknown keys, or out-of-range values."""
