"""Exception hierarchy shared across the package.

CLI exit codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
"""


class CzslError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(CzslError):
    """Invalid configuration: bad hyperparameter, recipe, or sequencing."""

    exit_code = 2


class DataError(CzslError):
    """Invalid or inconsistent data: bad files, shapes, labels."""

    exit_code = 3


class NumericError(CzslError):
    """Non-finite values encountered where finite math is required."""

    exit_code = 4


class DimensionError(DataError):
    """Shape mismatch between arrays; message reports both shapes."""


class SequencingError(ConfigError):
    """Task-stream ordering violated (e.g. task >= 2 without a previous checkpoint)."""


class EvaluationError(DataError):
    """Evaluation ledger is inconsistent or incomplete."""
