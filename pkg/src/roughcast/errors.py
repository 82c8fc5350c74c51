"""Exception hierarchy shared by all roughcast modules."""


class RoughcastError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(RoughcastError):
    """Structural problem: wrong columns, duplicate names, width mismatch."""


class ParseError(RoughcastError):
    """A file could not be parsed; message carries the location."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CorruptFileError(ParseError):
    """Binary payload inconsistent with its own declared layout."""


class ValidationError(RoughcastError):
    """Well-formed input carrying values outside the allowed domain."""


class ConfigError(RoughcastError):
    """Invalid configuration value or combination."""


class InvalidDesignError(ConfigError):
    """Experiment design request that cannot be constructed."""


class InsufficientDataError(RoughcastError):
    """Too few observations for the requested statistic or fit."""


class BatchTooSmallError(RoughcastError):
    """Train-mode forward needs at least two rows for batch statistics."""


class DivergenceError(RoughcastError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class LeakageError(RoughcastError):
    """Evaluation data reached a fitting or selection stage. Hard failure."""


class ContractError(RoughcastError):
    """Two components disagree on a shared interface (feature order, scaler)."""


class SearchFailedError(RoughcastError):
    """Hyperparameter search ended without a single complete trial."""

    def __init__(self, message, trials=None):
        super().__init__(message)
        self.trials = trials or []
