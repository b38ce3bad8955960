"""Exception types raised across the package."""


class ChernoffNetError(Exception):
    """Base class for package errors."""


class DimensionError(ChernoffNetError, ValueError):
    """Two distributions or tables disagree on their alphabet/action sizes."""


class InfiniteDivergenceError(ChernoffNetError, ValueError):
    """KL divergence is infinite: q(a) = 0 where p(a) > 0."""


class ConfigurationError(ChernoffNetError, ValueError):
    """An experiment or model violates a precondition of the protocol."""


class ConnectivityError(ChernoffNetError, ValueError):
    """The network graph is not connected."""


class StepCapExceeded(ChernoffNetError, RuntimeError):
    """A trial ran past its step cap without reaching a decision."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed
