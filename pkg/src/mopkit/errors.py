"""Exception types raised across the package."""


class MopkitError(Exception):
    """Base class for every error this package raises deliberately."""


class NamedColumnAbsent(MopkitError):
    def __init__(self, name, available=()):
        self.name = name
        self.available = tuple(available)
        msg = f"column {name!r} not found"
        if available:
            msg += f" (available: {', '.join(self.available)})"
        super().__init__(msg)


class MalformedCell(MopkitError):
    """A cell could not be parsed as a finite number. Rows are 1-based data
    rows (header excluded)."""

    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: bad cell {value!r}")


class EmptyTable(MopkitError):
    pass


class InvalidPartition(MopkitError):
    pass


class IndexOutOfRange(MopkitError):
    def __init__(self, index, m):
        self.index = index
        self.m = m
        super().__init__(f"variable index {index} out of range for {m} inputs")


class Underdetermined(MopkitError):
    """More coefficients than samples."""

    def __init__(self, p, n):
        self.p = p
        self.n = n
        super().__init__(f"{p} coefficients cannot be fit from {n} samples")


class SingularDesign(MopkitError):
    pass


class DimensionMismatch(MopkitError):
    def __init__(self, expected, got, names=None):
        self.expected = expected
        self.got = got
        self.names = names
        msg = f"expected {expected} input dimensions, got {got}"
        if names:
            msg += f" (expected variables: {', '.join(names)})"
        super().__init__(msg)


class DegenerateSupports(MopkitError):
    pass


class ConstantResponse(MopkitError):
    pass


class ConstantColumn(MopkitError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"column {name!r} is constant")


class FoldUnderdetermined(MopkitError):
    def __init__(self, fold, cause=None):
        self.fold = fold
        super().__init__(f"training set of fold {fold} leaves the trainer "
                         f"underdetermined" + (f": {cause}" if cause else ""))


class NoFeasibleModel(MopkitError):
    def __init__(self, reasons):
        self.reasons = list(reasons)
        super().__init__(
            "every searched configuration failed; first reason: "
            + (self.reasons[0] if self.reasons else "none recorded"))
