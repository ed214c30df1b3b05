"""Exception and warning classes raised across the package."""

from sklearn.exceptions import ConvergenceWarning as _SkConvergenceWarning


class SRDOError(ValueError):
    """Base class for all data and numerical errors raised by this package."""


class DimensionMismatch(SRDOError):
    pass


class ZeroVarianceColumn(SRDOError):
    def __init__(self, column):
        self.column = column
        super().__init__(
            f"column {column!r} has zero variance; drop it or keep it raw explicitly"
        )


class DegenerateWeightedVariance(SRDOError):
    def __init__(self, column, variance):
        self.column = column
        self.variance = variance
        super().__init__(
            f"weighted variance of column {column} is {variance:.3g} (< 1e-12)"
        )


class NotSymmetric(SRDOError):
    pass


class InvalidRho(SRDOError):
    pass


class NotPositiveDefinite(SRDOError):
    pass


class AllWeightsClipped(SRDOError):
    """Every raw density-ratio weight fell outside the clip bounds."""


class AllSamplesDropped(SRDOError):
    """The confidence threshold removed every row from ratio training."""


class SingularGram(SRDOError):
    """Weighted Gram matrix is (numerically) singular.

    Sample reweighting cannot repair exact rank deficiency: if the columns are
    linearly dependent on every row they stay dependent under any weights.
    """


class IndefinitePenalty(SRDOError):
    pass


class OneClassOnly(SRDOError):
    pass


class EmptyInput(SRDOError):
    pass


class ConfigError(SRDOError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ParseError(SRDOError):
    def __init__(self, line, column, message="malformed CSV"):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class MissingColumn(SRDOError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"column {name!r} not found in header")


class NonNumericCell(SRDOError):
    def __init__(self, row, column, line=None, value=None):
        self.row = row
        self.column = column
        self.line = line
        self.value = value
        super().__init__(
            f"data row {row} (line {line}), column {column!r}: "
            f"non-numeric or missing value {value!r}"
        )


class RowOutOfRange(SRDOError):
    def __init__(self, line, value):
        self.line = line
        self.value = value
        super().__init__(f"line {line}: environment value {value!r} outside bin edges")


class ConvergenceWarning(_SkConvergenceWarning):
    pass


class NoImprovementWarning(UserWarning):
    pass


class DegenerateEigenspaceWarning(UserWarning):
    pass
