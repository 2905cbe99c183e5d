"""Exception types shared across the package."""


class SvshrinkError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidModeError(SvshrinkError, ValueError):
    """A contamination mode descriptor violates its invariants."""


class SignalAnnihilatedError(InvalidModeError):
    """The mode wipes out the signal mean (mu_a == 0); no estimator can recover X."""


class EstimationError(SvshrinkError, ValueError):
    """Parameter estimation is impossible on the given input (e.g. zero spectrum)."""


class MatrixFormatError(SvshrinkError, ValueError):
    """A matrix file or payload is malformed (ragged rows, non-numeric cells)."""
