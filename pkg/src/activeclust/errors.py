"""Exception types shared across the package."""


class ActiveClustError(Exception):
    """Base class for all package errors."""


class ParseError(ActiveClustError):
    """Malformed input file; message carries the offending line number."""


class ShapeError(ActiveClustError):
    """Array or embedding dimension mismatch."""


class ConfigError(ActiveClustError):
    """Invalid configuration value."""


class ContractError(ActiveClustError):
    """A caller violated an operation's precondition."""


class NumericError(ActiveClustError):
    """Non-finite values where finite numbers are required."""
