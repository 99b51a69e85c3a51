"""Exception hierarchy shared by every module."""


class PoolingError(Exception):
    """Base class for all errors raised by redpool."""


class DomainError(PoolingError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class InstabilityError(DomainError):
    """The offered load is not strictly below the available capacity."""


class TruncationError(PoolingError):
    """A truncated state space cannot certify the requested tail mass."""


class InfeasibleRatesError(PoolingError):
    """Assignment rates violate non-negativity or the balance equations."""


class SolverError(PoolingError):
    """A linear solve failed or returned a non-distribution."""


class NoFrontierError(PoolingError):
    """No configuration is individually rational for both providers."""


class DegenerateFrontierError(NoFrontierError):
    """Neither provider benefits from sharing, so no threshold exists."""


class ConfigError(PoolingError, ValueError):
    """A study configuration failed validation."""
