"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands with incompatible dimensions."""


class DegenerateInputError(ValueError):
    """Numerically degenerate input, e.g. a zero vector where a direction is needed."""


class ProtocolError(RuntimeError):
    """Violation of the incremental-session contract: label collisions across
    sessions, evaluation on labels never registered, lifecycle misuse."""


class DataFormatError(ValueError):
    """Malformed external data file."""


class ConfigError(ValueError):
    """Invalid, inconsistent, or unknown run configuration."""
