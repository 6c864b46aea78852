"""Exception hierarchy shared by every parnet module."""


class ParnetError(Exception):
    """Base class for all errors raised by parnet."""


class ShapeError(ParnetError, ValueError):
    """Operand shapes are incompatible."""


class ValidationError(ParnetError, ValueError):
    """A configuration or dataset violates its invariants.

    ``violations`` lists every problem found, not only the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ContractError(ParnetError, RuntimeError):
    """An operation was called outside its contract (e.g. softmax derivative)."""


class DataError(ParnetError):
    """Dataset files are missing or unreadable."""


class IDXFormatError(DataError, ValueError):
    """Malformed IDX file: bad magic, truncated payload, or mismatched pair."""


class ConfigError(ParnetError, ValueError):
    """Configuration file could not be parsed or contains unknown keys."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
