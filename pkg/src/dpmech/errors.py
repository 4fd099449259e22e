"""Exception hierarchy for the dpmech package."""


class DpMechError(Exception):
    """Base class for all dpmech errors."""


class DimensionMismatch(DpMechError):
    """Array shapes do not agree with the declared group size."""


class EntryOutOfRange(DpMechError):
    """A matrix entry lies outside [0, 1] beyond tolerance."""


class ColumnSumError(DpMechError):
    """A column of a mechanism matrix does not sum to 1 within tolerance."""


class AlphaOutOfRange(DpMechError):
    """Privacy parameter alpha outside its admissible interval."""


class UndefinedForN0(DpMechError):
    """Score requested for a size-0 mechanism (the formulas divide by n)."""


class UnsupportedObjective(DpMechError):
    """Objective shape not supported by the LP builder (max aggregator)."""


class NumericalInstability(DpMechError):
    """Simplex stalled: every admissible pivot fell below the magnitude threshold."""


class LpInternalError(DpMechError):
    """A mechanism-design LP reported infeasible/unbounded, which should be impossible."""


class InputOutOfRange(DpMechError):
    """Sampling input j outside [0, n]."""


class BadProbability(DpMechError):
    """Probability parameter outside [0, 1]."""


class ParseError(DpMechError):
    """Malformed CSV content; message carries the offending line number."""


class UnknownColumn(DpMechError):
    """Requested column missing from a CSV header."""
