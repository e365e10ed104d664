"""Exceptions raised by sicprob.

Every error is a `ValueError`, so callers that only care about bad input can
catch that. Errors that come from a numerical check carry the measured
quantity, so a caller can report how far off the input was.
"""
import typing


class SicProbError(ValueError):
    """Base class of every error raised by sicprob."""


class InvalidDimension(SicProbError):
    """The Hilbert-space dimension is not an integer >= 2."""


class DimensionMismatch(SicProbError):
    """Two objects in one computation live in different dimensions."""

    def __init__(self, expected: int, got: int, what: str = "object"):
        super().__init__(
            f"Dimension mismatch: expected {what} of dimension {expected}, "
            f"got {got}."
        )
        self.expected = expected
        self.got = got


class ShapeMismatch(SicProbError):
    """Array shapes that must agree do not."""


class NotFinite(SicProbError):
    """An input array holds NaN or infinite entries."""


class _DeviationError(SicProbError):
    """An invariant failed by a measured amount."""

    invariant: typing.ClassVar[str] = "invariant"

    def __init__(self, deviation: float, tol: typing.Optional[float] = None):
        message = f"{self.invariant} violated by {deviation:.3e}"
        if tol is not None:
            message += f" (tolerance {tol:.1e})"
        super().__init__(message)
        self.deviation = deviation
        self.tol = tol


class NotHermitian(_DeviationError):
    invariant = "Hermiticity"


class NotUnitTrace(_DeviationError):
    invariant = "Unit trace"


class NotPositive(_DeviationError):
    """The smallest eigenvalue is negative; `deviation` is its magnitude."""

    invariant = "Positive semidefiniteness"


class NotUnitary(_DeviationError):
    invariant = "Unitarity"


class NotAPovm(_DeviationError):
    """Effects are not Hermitian, not positive or do not sum to identity."""

    invariant = "POVM completeness"


class NotAProbabilityVector(_DeviationError):
    """Entries outside [0, 1] or not summing to one."""

    invariant = "Probability normalization"


class NotAQuantumState(NotPositive):
    """A reconstructed operator is not positive semidefinite.

    Not every probability vector corresponds to a quantum state; this marks
    one that falls outside the state space.
    """

    invariant = "Reconstruction positivity"

    def __init__(
        self, min_eigenvalue: float, tol: typing.Optional[float] = None
    ):
        super().__init__(-min_eigenvalue, tol)
        self.min_eigenvalue = min_eigenvalue


class ZeroProbabilityOutcome(SicProbError):
    def __init__(self, probability: float):
        super().__init__(
            f"Cannot condition on an outcome of probability {probability:.3e}"
        )
        self.probability = probability


class WrongCount(SicProbError):
    """A SIC or MIC needs exactly d² operators."""


class InvalidFiducial(SicProbError):
    """A fiducial vector is zero, unnormalized or of the wrong length."""


class NoBuiltinForDimension(SicProbError):
    def __init__(self, dim: int):
        super().__init__(f"No built-in SIC fiducial for dimension {dim}.")
        self.dim = dim


class UncertifiedSic(SicProbError):
    """The structure fails the SIC conditions beyond the certified bound."""


class NotInformationallyComplete(SicProbError):
    """The effects do not span the space of Hermitian operators."""

    def __init__(self, determinant: float, detail: str = ""):
        message = (
            "Effects are not informationally complete "
            f"(scaled Gram determinant {determinant:.3e})"
        )
        if detail:
            message += f": {detail}"
        super().__init__(message)
        self.determinant = determinant


class InvalidSearchConfig(SicProbError):
    pass


class SchemaError(SicProbError):
    """A JSON document does not match the expected wire format."""
