"""Density matrices, unitaries and POVMs, with the conventional Born rule.

This is the amplitude side of sicprob: the objects here are checked
against their defining invariants on construction and are what every
probability-space computation is verified against.

All objects are immutable. Their arrays are read-only copies, so they can be
shared freely between threads and processes.
"""
import logging
import typing

import numpy as np  # type: ignore
import scipy.linalg  # type: ignore

from .errors import (
    DimensionMismatch,
    InvalidDimension,
    NotAPovm,
    NotFinite,
    NotHermitian,
    NotPositive,
    NotUnitary,
    NotUnitTrace,
    ShapeMismatch,
    ZeroProbabilityOutcome,
)

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
"""A dense complex matrix. Entry access is bounds-checked by numpy."""

CONSTRUCTION_TOL = 1e-12
"""Tolerance on objects we construct ourselves (orbits, random samples)."""
VALIDITY_TOL = 1e-10
"""Tolerance on the invariants of validated inputs."""
COMPARISON_TOL = 1e-9
"""Tolerance when comparing results computed along two different routes."""
PROBABILITY_FLOOR = 1e-12
"""Outcome probabilities at or below this cannot be conditioned on."""


def check_dim(dim: int) -> int:
    """Checks that `dim` is a valid Hilbert-space dimension.

    Raises:
        InvalidDimension if `dim` is not an integer >= 2.
    """
    if isinstance(dim, (bool, np.bool_)) or not isinstance(
        dim, (int, np.integer)
    ):
        raise InvalidDimension(f"Dimension must be an integer, got {dim!r}")
    if dim < 2:
        raise InvalidDimension(f"Dimension must be at least 2, got {dim}")
    return int(dim)


def identity(n: int) -> ComplexMatrix:
    """The n×n complex identity matrix."""
    return np.eye(n, dtype=complex)


def dagger(matrix: ComplexMatrix) -> ComplexMatrix:
    return matrix.conj().swapaxes(-1, -2)


def _frozen(array: np.ndarray, dtype=complex) -> np.ndarray:
    frozen = np.array(array, dtype=dtype, copy=True)
    frozen.setflags(write=False)
    return frozen


def _check_finite(array: np.ndarray, what: str = "matrix"):
    if not np.all(np.isfinite(array)):
        raise NotFinite(f"The {what} has NaN or infinite entries")


def _square_matrix(matrix: ComplexMatrix) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeMismatch(f"Expected a square matrix, got {matrix.shape}")
    _check_finite(matrix)
    return matrix


def _expect_dim(got: int, expected: int, what: str):
    if got != expected:
        raise DimensionMismatch(expected, got, what)


def hermiticity_deviation(matrix: ComplexMatrix) -> float:
    """max |M_ab - conj(M_ba)| over all entries."""
    return float(np.max(np.abs(matrix - dagger(matrix))))


def hermitize(matrix: ComplexMatrix) -> ComplexMatrix:
    """Returns the Hermitian part (M + M†)/2."""
    return (matrix + dagger(matrix)) / 2


def min_eigenvalue(matrix: ComplexMatrix) -> float:
    """The smallest eigenvalue of the Hermitian part of `matrix`."""
    return float(scipy.linalg.eigvalsh(hermitize(matrix))[0])


def psd_sqrt(matrix: ComplexMatrix) -> ComplexMatrix:
    """The square root of a positive semidefinite matrix.

    Computed through the Hermitian eigendecomposition; eigenvalues are
    clamped at zero first, since PSD inputs carry -1e-12 sized eigenvalues
    after rounding.
    """
    eigenvalues, eigenvectors = scipy.linalg.eigh(hermitize(matrix))
    roots = np.sqrt(np.clip(eigenvalues, 0, None))
    return (eigenvectors * roots) @ dagger(eigenvectors)


class DensityMatrix(typing.NamedTuple):
    """A Hermitian, positive semidefinite, unit-trace operator.

    Construct with `validate_density`, which checks the invariants.
    """

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        """tr(ρ²), between 1/d and 1."""
        return float(np.real(np.vdot(self.matrix, self.matrix)))


class Unitary(typing.NamedTuple):
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "Unitary":
        return Unitary(_frozen(dagger(self.matrix)))


class Povm(typing.NamedTuple):
    """A measurement: positive effects summing to the identity.

    The effects are stored as one (m, d, d) array, indexed by outcome.
    """

    effects: np.ndarray

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def size(self) -> int:
        return self.effects.shape[0]


class OutcomeDistribution(typing.NamedTuple):
    """Outcome probabilities of a measurement.

    Attributes:
        entries: The probabilities, clamped to [0, 1].
        raw: The probabilities as computed, before clamping. Identities are
            checked on these.
    """

    entries: np.ndarray
    raw: np.ndarray

    @property
    def povm_size(self) -> int:
        return len(self.entries)

    @property
    def clamp_deviation(self) -> float:
        """How far clamping moved any entry."""
        return float(np.max(np.abs(self.entries - self.raw)))


def make_distribution(raw: np.ndarray) -> OutcomeDistribution:
    """Wraps computed probabilities, clamping them to [0, 1]."""
    raw = _frozen(np.real(raw), dtype=float)
    return OutcomeDistribution(_frozen(np.clip(raw, 0, 1), dtype=float), raw)


def validate_density(
    matrix: ComplexMatrix, tol: float = VALIDITY_TOL
) -> DensityMatrix:
    """Checks the density-matrix invariants and wraps the matrix.

    Parameters:
        matrix: A square complex matrix.
        tol: Tolerance for every invariant.

    Returns:
        The validated, read-only DensityMatrix.

    Raises:
        ShapeMismatch if the matrix is not square.
        NotFinite if an entry is NaN or infinite.
        NotHermitian, NotUnitTrace or NotPositive for the first failed
        invariant, each carrying the measured deviation.
    """
    matrix = _square_matrix(matrix)
    check_dim(matrix.shape[0])
    deviation = hermiticity_deviation(matrix)
    if deviation > tol:
        raise NotHermitian(deviation, tol)
    deviation = abs(np.trace(matrix) - 1)
    if deviation > tol:
        raise NotUnitTrace(float(deviation), tol)
    lowest = min_eigenvalue(matrix)
    if lowest < -tol:
        raise NotPositive(-lowest, tol)
    return DensityMatrix(_frozen(matrix))


def validate_unitary(
    matrix: ComplexMatrix, tol: float = VALIDITY_TOL
) -> Unitary:
    """Checks max |U·U† - I| <= tol and wraps the matrix.

    Raises:
        ShapeMismatch if the matrix is not square.
        NotUnitary carrying the deviation.
    """
    matrix = _square_matrix(matrix)
    dim = check_dim(matrix.shape[0])
    deviation = float(np.max(np.abs(matrix @ dagger(matrix) - identity(dim))))
    if deviation > tol:
        raise NotUnitary(deviation, tol)
    return Unitary(_frozen(matrix))


def validate_effect(
    effect: ComplexMatrix, tol: float = VALIDITY_TOL
) -> np.ndarray:
    """Checks that `effect` is Hermitian and positive semidefinite."""
    effect = _square_matrix(effect)
    deviation = hermiticity_deviation(effect)
    if deviation > tol:
        raise NotHermitian(deviation, tol)
    lowest = min_eigenvalue(effect)
    if lowest < -tol:
        raise NotPositive(-lowest, tol)
    return effect


def validate_povm(
    effects: typing.Sequence[ComplexMatrix], tol: float = VALIDITY_TOL
) -> Povm:
    """Checks every effect and the completeness relation, then wraps them.

    Parameters:
        effects: The effects E_j, in outcome order. At least one.
        tol: Tolerance for Hermiticity, positivity and completeness.

    Raises:
        ShapeMismatch if there are no effects or they are not all d×d.
        NotFinite if an entry is NaN or infinite.
        NotHermitian, NotPositive for a bad effect.
        NotAPovm if the effects do not sum to the identity.
    """
    stacked = np.asarray(effects, dtype=complex)
    if stacked.ndim != 3 or stacked.shape[0] < 1:
        raise ShapeMismatch(
            f"Expected a non-empty list of matrices, got {stacked.shape}"
        )
    if stacked.shape[1] != stacked.shape[2]:
        raise ShapeMismatch(f"Effects must be square, got {stacked.shape}")
    _check_finite(stacked, "POVM")
    dim = check_dim(stacked.shape[1])
    for effect in stacked:
        validate_effect(effect, tol)
    deviation = float(
        np.max(np.abs(stacked.sum(axis=0) - identity(dim)))
    )
    if deviation > tol:
        raise NotAPovm(deviation, tol)
    return Povm(_frozen(stacked))


def born_direct(rho: DensityMatrix, povm: Povm) -> OutcomeDistribution:
    """The Born rule Q(E_j) = tr(ρ E_j).

    Parameters:
        rho: The state.
        povm: The measurement.

    Returns:
        The outcome distribution, clamped to [0, 1] with the raw values
        retained.

    Raises:
        DimensionMismatch if the state and the measurement disagree on d.
    """
    _expect_dim(povm.dim, rho.dim, "POVM")
    # tr(ρE) = Σ_ab ρ_ab E_ba
    raw = np.einsum("ab,jba->j", rho.matrix, povm.effects)
    return make_distribution(raw)


def luders_update(
    rho: DensityMatrix, effect: ComplexMatrix, tol: float = VALIDITY_TOL
) -> DensityMatrix:
    """Updates a state on an outcome using Lüders' rule.

    Returns √E ρ √E / tr(ρE). For a rank-one projector Π this is Π itself,
    whatever the prior state.

    Parameters:
        rho: The state before the measurement.
        effect: The effect of the outcome that was obtained.
        tol: Tolerance when checking that `effect` is a POVM element.

    Raises:
        DimensionMismatch if the effect has the wrong size.
        NotHermitian, NotPositive, NotAPovm if `effect` is not an effect.
        ZeroProbabilityOutcome if tr(ρE) <= 1e-12.
    """
    effect = validate_effect(effect, tol)
    _expect_dim(effect.shape[0], rho.dim, "effect")
    excess = float(scipy.linalg.eigvalsh(hermitize(effect))[-1]) - 1
    if excess > tol:
        # an effect must also satisfy E <= I
        raise NotAPovm(excess, tol)
    probability = float(np.real(np.einsum("ab,ba->", rho.matrix, effect)))
    if probability <= PROBABILITY_FLOOR:
        raise ZeroProbabilityOutcome(probability)
    root = psd_sqrt(effect)
    updated = hermitize(root @ rho.matrix @ root) / probability
    return validate_density(updated, tol=COMPARISON_TOL)


def _complex_gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal(
        (dim, dim)
    )


def random_density(dim: int, seed: int) -> DensityMatrix:
    """A seeded random density matrix, A·A†/tr(A·A†) for Gaussian A."""
    dim = check_dim(dim)
    rng = np.random.default_rng(seed)
    sample = _complex_gaussian(rng, dim)
    positive = hermitize(sample @ dagger(sample))
    return validate_density(positive / np.trace(positive).real)


def random_pure_density(dim: int, seed: int) -> DensityMatrix:
    """A seeded Haar-random pure state |ψ⟩⟨ψ|."""
    dim = check_dim(dim)
    rng = np.random.default_rng(seed)
    vector = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    vector /= np.linalg.norm(vector)
    return validate_density(np.outer(vector, vector.conj()))


def random_unitary(dim: int, seed: int) -> Unitary:
    """A seeded Haar-random unitary.

    QR decomposition of a complex Gaussian matrix, with the phases of R's
    diagonal moved into Q so that R's diagonal is real and positive.
    """
    dim = check_dim(dim)
    rng = np.random.default_rng(seed)
    sample = _complex_gaussian(rng, dim) / np.sqrt(2)
    q, r = np.linalg.qr(sample)
    diagonal = np.diagonal(r)
    return validate_unitary(q * (diagonal / np.abs(diagonal)))


def random_povm(dim: int, outcomes: int, seed: int) -> Povm:
    """A seeded random POVM with `outcomes` full-rank effects.

    Random positive matrices G_j are made to sum to the identity by
    conjugating with S^{-1/2}, where S = Σ_j G_j.
    """
    dim = check_dim(dim)
    if outcomes < 1:
        raise ShapeMismatch(f"A POVM needs at least one outcome: {outcomes}")
    rng = np.random.default_rng(seed)
    samples = [_complex_gaussian(rng, dim) for _ in range(outcomes)]
    positives = np.array([s @ dagger(s) for s in samples])
    eigenvalues, eigenvectors = scipy.linalg.eigh(positives.sum(axis=0))
    inv_root = (eigenvectors / np.sqrt(eigenvalues)) @ dagger(eigenvectors)
    effects = [hermitize(inv_root @ g @ inv_root) for g in positives]
    return validate_povm(effects)


def basis_povm(dim: int) -> Povm:
    """The projective measurement in the computational basis."""
    dim = check_dim(dim)
    return validate_povm([np.diag(row) for row in identity(dim)])
