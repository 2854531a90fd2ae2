"""Exception types shared across the package."""


class MdalError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MdalError):
    """Invalid configuration: bad wiring, unknown keys, violated invariants."""


class ShapeError(MdalError, ValueError):
    """Array dimensions do not match what an operation requires."""


class DataError(MdalError):
    """Dataset loading or pool bookkeeping violated a contract."""


class TrainingError(MdalError):
    """A training run cannot proceed (e.g. a domain has no labeled data)."""


class NumericError(MdalError):
    """A non-finite value surfaced where finite math was required."""
