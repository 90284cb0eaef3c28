"""Exception types shared across the package."""


class PosebenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PosebenchError):
    """Input data or invariant violation (maps to CLI exit code 2)."""
