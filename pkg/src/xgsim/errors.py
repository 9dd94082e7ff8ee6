"""Exception hierarchy shared across the pipeline."""


class XgSimError(Exception):
    """Base class for all package errors."""


class SchemaError(XgSimError):
    """A required column is missing from an input file."""

    def __init__(self, path, column):
        self.path = str(path)
        self.column = column
        super().__init__(f"{self.path}: missing required column {column!r}")


class InputFormatError(XgSimError):
    """An input file could not be parsed as UTF-8 CSV."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{self.path}: unreadable CSV ({reason})")


class IntegrityError(XgSimError):
    """Cross-record consistency was violated (duplicate ids, broken joins)."""


class RowValidationError(XgSimError):
    """A single input row failed validation."""

    def __init__(self, row, column, reason):
        self.row = row
        self.column = column
        self.reason = reason
        super().__init__(f"row {row}, column {column!r}: {reason}")


class DegenerateOutcomeError(XgSimError):
    """Labels are all goals or all non-goals; the likelihood has no maximum."""


class ScoringError(XgSimError):
    """A design row does not match the column registry of a fitted model."""


class ComparabilityError(XgSimError):
    """Fits estimated on different samples cannot be compared by AIC."""


class CoverageError(XgSimError):
    """A team has no matches where at least one is required."""


class DomainError(XgSimError, ValueError):
    """A numeric argument is outside its admissible range."""
