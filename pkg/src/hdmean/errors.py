"""Exception types raised by hdmean."""


class HdmeanError(Exception):
    """Base class for all hdmean errors."""


class SingularCovariance(HdmeanError):
    """The SPD factorization of a (pooled, subspace or projected) covariance failed.

    Signals that the working dimension is too large for the sample size, or
    that the data are degenerate (e.g. a variable constant in both samples).
    """


class InvalidK(HdmeanError):
    """Subspace/projection dimension violates its admissible range."""


class ZeroVariance(HdmeanError):
    """A variable has zero pooled variance where a positive one is required."""

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"column {column} has zero pooled variance")


class TooManyPermutations(HdmeanError):
    """Exact enumeration was requested above the configured cap."""


class NotPositiveDefinite(HdmeanError):
    """A covariance model does not define a positive definite matrix."""


class IncompatibleLayout(HdmeanError):
    """A mean-shift pattern does not fit the block layout of the mean vector."""


class ParseError(HdmeanError):
    """A delimited matrix file could not be parsed."""

    def __init__(self, line: int, column: int, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, field {column}: {reason}")


class NonFinite(HdmeanError):
    """A parsed matrix cell is NaN or infinite."""

    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value at row {row}, column {col}")
