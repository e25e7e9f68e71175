"""Exception hierarchy shared by every charpca module."""


class CharPCAError(Exception):
    """Base class for all library errors."""


class DimensionError(CharPCAError, ValueError):
    """Shapes of the inputs do not agree with the operation."""


class SymmetryError(CharPCAError, ValueError):
    """A matrix expected to be symmetric is not."""


class ConvergenceError(CharPCAError, ArithmeticError):
    """An iterative solver did not converge."""


class InsufficientDataError(CharPCAError, ValueError):
    """Too few samples for the requested statistic."""


class ValidationError(CharPCAError, ValueError):
    """Input values are invalid (non-finite entries, bad basis, ...)."""


class DegenerateError(CharPCAError, ArithmeticError):
    """A quantity needed by the computation vanishes."""


class DegenerateSpectrumError(DegenerateError):
    """All eigenvalues are zero, so no rank can be selected."""


class RankDeficiencyError(DegenerateError):
    """A retained eigenvalue is zero on the Gram path."""


class DegenerateReconstructionError(DegenerateError):
    """Reconstructed complex entries are too close to zero to take an argument.

    ``coordinates`` holds the offending ``(row, col)`` pairs.
    """

    def __init__(self, message, coordinates=()):
        super().__init__(message)
        self.coordinates = list(coordinates)


class IngestionError(CharPCAError, ValueError):
    """A data file could not be parsed into a valid matrix."""
