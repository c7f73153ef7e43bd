"""Exception hierarchy shared by all lsreal modules."""


class LsrealError(Exception):
    """Base class for all errors raised by this package."""


# -- system / kernel evaluation -------------------------------------------

class NonFiniteInput(LsrealError):
    """A matrix entry or a time argument is NaN or infinite."""


class UnknownTag(LsrealError):
    """The requested initial-state tag is not part of the realization."""


class DurationMismatch(LsrealError):
    """Input signal does not cover the switching schedule, or a time list
    does not match the mode word it is paired with."""


class EmptyWord(LsrealError):
    """Kernel functions are defined for non-empty mode words only."""


class OrderTooHigh(LsrealError):
    """Finite-difference approximation is restricted to low derivative order."""


# -- power series ----------------------------------------------------------

class UnknownIndex(LsrealError):
    """The requested series index is not part of the family."""


class ShiftTooLong(LsrealError):
    """Shift word longer than the horizon of the truncated series."""


class BadIndexSet(LsrealError):
    """Representation index set does not contain one channel index per mode
    and input channel."""


class BadOutDim(LsrealError):
    """Representation output dimension is not divisible by the alphabet size."""


# -- Hankel matrices -------------------------------------------------------

class InsufficientOrder(LsrealError):
    """The Markov family does not contain parameters of high enough order."""


class SvdFailure(LsrealError):
    """Singular value decomposition failed to converge."""


# -- realization algorithms -------------------------------------------------

class RankConditionFailed(LsrealError):
    """The three-block rank equality required by the realization algorithm
    does not hold."""


class ShiftInconsistent(LsrealError):
    """The column-shift equations of the column-space algorithm have no
    solution within tolerance."""


class NoUniqueSolution(LsrealError):
    """The shift equation of the factorization algorithm has no unique
    solution; no realization is returned."""


# -- analysis ----------------------------------------------------------------

class DimensionMismatch(LsrealError):
    """The two systems are structurally incomparable (different alphabet or
    input/output dimensions)."""


class IncompatibleFamilies(LsrealError):
    """The two Markov families disagree on alphabet, dimensions or index set."""
