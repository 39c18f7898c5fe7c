"""Exception types shared across the package."""


class JumpSyncError(Exception):
    """Base class for all package errors."""


class ConfigError(JumpSyncError, ValueError):
    """Invalid simulation or pipeline configuration."""


class SchemaError(JumpSyncError, ValueError):
    """Input data does not match the expected panel layout."""


class InfeasibleConstraintError(JumpSyncError, ValueError):
    """Rearrangement constraints admit no feasible co-permutation."""


class NumericalError(JumpSyncError, ArithmeticError):
    """A numerical routine failed (singular matrix, degenerate series)."""
