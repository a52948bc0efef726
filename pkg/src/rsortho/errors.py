"""Exception hierarchy shared by all modules."""


class RSError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(RSError, ValueError):
    pass


class SingularGram(RSError, ArithmeticError):
    """A Gram matrix is numerically singular (rank-deficient input)."""


class ZeroMatrix(RSError, ValueError):
    pass


class NotSkewHermitian(RSError, ValueError):
    pass


class InvalidDims(RSError, ValueError):
    pass


class InfeasibleN(RSError, ValueError):
    """Too few surface elements for perfect orthogonalization."""


class NotApplicable(RSError, ValueError):
    pass


class IllConditionedBlock(RSError, ArithmeticError):
    """An M-element block of the estimated BS-RS channel cannot be inverted.

    ``block`` is the 1-based index of the failing block.
    """

    def __init__(self, block, rcond):
        self.block = block
        self.rcond = rcond
        super().__init__(f"block {block} of H1 is ill-conditioned (rcond={rcond:.3e})")
