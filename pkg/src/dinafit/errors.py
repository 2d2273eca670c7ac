"""Exception types shared across the package."""


class DinafitError(Exception):
    """Base class for package-specific failures."""


class DimensionError(DinafitError, ValueError):
    """Inputs whose shapes or lengths do not conform."""


class DomainError(DinafitError, ValueError):
    """Entries or parameters outside their legal domain."""


class ConfigError(DinafitError, ValueError):
    """Invalid run configuration or infeasible constraint."""
