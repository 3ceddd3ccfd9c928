"""Exception hierarchy for the cla package.

Callers that need coarse dispatch (e.g. the CLI's exit codes) can catch
``ClaError`` for validation/numeric failures and ``FileFormatError`` for
anything wrong with on-disk data.
"""


class ClaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ClaError):
    """Operands have incompatible or invalid shapes."""


class ValidationError(ClaError):
    """An input value violates a documented precondition."""


class NumericError(ClaError):
    """A computation produced non-finite or otherwise invalid numbers."""


class ConvergenceError(ClaError):
    """An iterative algorithm exhausted its iteration budget."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class SingularMatrixError(ClaError):
    """A linear system is singular (or numerically indistinguishable from it)."""


class CapacityError(ClaError):
    """A guard against super-linear blowup was exceeded."""


class TrainingError(ClaError):
    """Model fitting failed in a way the caller may be able to remedy."""


class FileFormatError(ClaError):
    """A file does not conform to one of the supported formats."""


class ParseError(FileFormatError):
    """Malformed text input; carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
