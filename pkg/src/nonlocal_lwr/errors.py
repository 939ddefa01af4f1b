"""Exception hierarchy shared across the package."""


class NonlocalLwrError(Exception):
    """Base class for all errors raised by this package."""


class NonTilingDomain(NonlocalLwrError):
    """Left and right half-domains do not tile with a common cell width."""


class NonPositiveEta(NonlocalLwrError):
    """Look-ahead distance must be strictly positive."""


class OutOfRangeDensity(NonlocalLwrError):
    """Density values must lie in [0, 1]."""


class CflViolation(NonlocalLwrError):
    """Requested time step exceeds the stability bound."""


class EpsTooSmall(NonlocalLwrError):
    """Mollification width must be at least one cell wide."""


class UnsupportedConfiguration(NonlocalLwrError):
    """Riemann configuration outside the class solved in closed form."""


class InsufficientSnapshots(NonlocalLwrError):
    """Trajectory output is too sparse in time for the requested audit."""


class InvariantViolation(NonlocalLwrError):
    """A runtime invariant (e.g. the maximum principle) failed mid-run."""


class ParseError(NonlocalLwrError):
    """Malformed config document; message carries line/key context."""


class ValidationError(NonlocalLwrError):
    """Config parsed but violates a scenario invariant."""
