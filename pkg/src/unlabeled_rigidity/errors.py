"""Exception types shared across the package."""


class ReconstructionError(Exception):
    """Base class for all package errors."""


class ResampleExhausted(ReconstructionError):
    pass


class NotRealizable(ReconstructionError):
    """Squared lengths whose Gram matrix has a negative eigenvalue."""


class RankTooHigh(ReconstructionError):
    """Squared lengths that need more than d dimensions."""


class DegenerateBase(ReconstructionError):
    pass


class Inconsistent(ReconstructionError):
    pass


class SizeMismatch(ReconstructionError, ValueError):
    pass


class IndexOutOfRange(ReconstructionError, IndexError):
    pass


class BudgetExceeded(ReconstructionError):
    """The bounded integer-relation enumeration would be too large."""


class ClosureGuardExceeded(ReconstructionError):
    pass


class NoBaseFound(ReconstructionError):
    pass


class AmbiguousResult(ReconstructionError):
    pass


class UnsupportedDimension(ReconstructionError, ValueError):
    """Dimension 1 (and unrestricted d = 3) reconstruction is refused."""


class ContractError(ReconstructionError, ValueError):
    pass


class DatasetFormatError(ReconstructionError, ValueError):
    pass
