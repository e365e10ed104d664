"""Quantum states as probability vectors, and the Born rule without them.

Given a SIC {Π_i}, a state ρ is fully described by the probabilities of
the SIC outcomes,

    p_i = (1/d) tr(ρ Π_i),

and can be rebuilt from them:

    ρ = Σ_i [(d+1) p_i - 1/d] Π_i.

Substituting the reconstruction into the Born rule gives the outcome
probabilities of any measurement {E_j} from probabilities alone,

    Q(E_j) = Σ_i [(d+1) p_i - 1/d] r(j, i),  r(j, i) = tr(E_j Π_i),

which differs from the classical law of total probability Σ_i p_i r(j, i).
Everything here works on probability vectors; `born_direct` in
`sicprob.quantum` is only used to check the results.

For any minimal informationally complete POVM (a MIC) the same works with
the dual frame of its effects in place of the SIC coefficients.
"""
import logging
import typing

import numpy as np  # type: ignore
import scipy.linalg  # type: ignore

from .errors import (
    DimensionMismatch,
    NotAProbabilityVector,
    NotAQuantumState,
    NotFinite,
    NotInformationallyComplete,
    ShapeMismatch,
    WrongCount,
)
from .quantum import (
    COMPARISON_TOL,
    PROBABILITY_FLOOR,
    VALIDITY_TOL,
    DensityMatrix,
    OutcomeDistribution,
    Povm,
    Unitary,
    _frozen,
    check_dim,
    dagger,
    hermitize,
    identity,
    make_distribution,
    min_eigenvalue,
    random_povm,
    validate_density,
    validate_povm,
)
from .sic import Fiducial, SicStructure, orbit, require_certified

__all__ = [
    "CondProbMatrix",
    "MicStructure",
    "OutcomeDistribution",
    "ProbVector",
    "born_urgleichung",
    "born_urgleichung_mic",
    "classical_ltp",
    "cond_prob_matrix",
    "evolve_probs_mic",
    "ltp_deviation",
    "mic_born_matrix",
    "mic_duals",
    "orbit_mic",
    "perturbed_mic",
    "probs_to_state",
    "probs_to_state_mic",
    "purity_from_probs",
    "state_to_probs",
    "state_to_probs_mic",
    "uniform_probs",
    "validate_probs",
]

logger = logging.getLogger(__name__)

GRAM_DETERMINANT_FLOOR = 1e-12
"""Scaled Gram determinants at or below this are numerically singular."""


class ProbVector(typing.NamedTuple):
    """The d² SIC (or MIC) outcome probabilities representing a state."""

    dim: int
    entries: np.ndarray


class CondProbMatrix(typing.NamedTuple):
    """r(j, i) = tr(E_j Π_i): rows are measurement outcomes j, columns SIC
    outcomes i. Each column is a probability distribution."""

    dim: int
    entries: np.ndarray

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def column_sum_deviation(self) -> float:
        return float(np.max(np.abs(self.entries.sum(axis=0) - 1)))


class MicStructure(typing.NamedTuple):
    """A minimal informationally complete POVM and its dual frame.

    Attributes:
        effects: (d², d, d) array of positive effects summing to I.
        duals: (d², d, d) array with tr(duals[k] effects[i]) = δ_ki.
        gram_determinant: Determinant of the Gram matrix tr(E_k E_i) after
            scaling it to unit diagonal.
    """

    effects: np.ndarray
    duals: np.ndarray
    gram_determinant: float

    @property
    def dim(self) -> int:
        return self.effects.shape[1]


def validate_probs(
    entries: typing.Sequence[float],
    dim: int,
    tol: float = VALIDITY_TOL,
    floor: float = PROBABILITY_FLOOR,
) -> ProbVector:
    """Checks and wraps a probability vector of a d-dimensional system.

    Parameters:
        entries: The d² probabilities.
        dim: The dimension d.
        tol: Allowed deviation of the sum from one.
        floor: Entries may dip this far below zero from rounding.

    Raises:
        ShapeMismatch if there are not d² entries.
        NotFinite if an entry is NaN or infinite.
        NotAProbabilityVector if an entry is outside [-floor, 1 + floor] or
        the sum is off.
    """
    dim = check_dim(dim)
    entries = np.asarray(entries, dtype=float)
    if entries.shape != (dim * dim,):
        raise ShapeMismatch(
            f"Expected {dim * dim} probabilities, got shape {entries.shape}"
        )
    if not np.all(np.isfinite(entries)):
        raise NotFinite("Probabilities must be finite numbers")
    out_of_range = max(
        -float(entries.min()), float(entries.max()) - 1, 0.0
    )
    if out_of_range > floor:
        raise NotAProbabilityVector(out_of_range, floor)
    deviation = abs(float(entries.sum()) - 1)
    if deviation > tol:
        raise NotAProbabilityVector(deviation, tol)
    return ProbVector(dim, _frozen(entries, dtype=float))


def uniform_probs(dim: int) -> ProbVector:
    """The vector with every entry 1/d², which represents I/d."""
    dim = check_dim(dim)
    return validate_probs(np.full(dim * dim, 1 / dim ** 2), dim)


def _check_same_dim(expected: int, got: int, what: str):
    if expected != got:
        raise DimensionMismatch(expected, got, what)


def _reconstruct(coefficients: np.ndarray, basis: np.ndarray, tol: float):
    rho = hermitize(np.einsum("i,iab->ab", coefficients, basis))
    lowest = min_eigenvalue(rho)
    if lowest < -tol:
        raise NotAQuantumState(lowest, tol)
    return validate_density(rho, tol=tol)


def state_to_probs(rho: DensityMatrix, sic: SicStructure) -> ProbVector:
    """The SIC probabilities of a state, p_i = (1/d) tr(ρ Π_i).

    Raises:
        DimensionMismatch if the state and the SIC disagree on d.
        UncertifiedSic if `sic` is not certified.
    """
    require_certified(sic, rho.dim)
    dim = rho.dim
    entries = np.einsum("ab,iba->i", rho.matrix, sic.projectors).real / dim
    return validate_probs(entries, dim)


def probs_to_state(
    p: ProbVector, sic: SicStructure, tol: float = COMPARISON_TOL
) -> DensityMatrix:
    """Rebuilds a state from its SIC probabilities.

    ρ = Σ_i [(d+1) p_i - 1/d] Π_i.

    The result is Hermitian with unit trace by construction. Positivity is
    checked, not repaired, since not every probability vector is the image
    of a state.

    Raises:
        DimensionMismatch, UncertifiedSic as `state_to_probs`.
        NotAQuantumState, carrying the smallest eigenvalue, when the
        reconstruction is not positive semidefinite within `tol`.
    """
    require_certified(sic, p.dim)
    dim = p.dim
    coefficients = (dim + 1) * p.entries - 1 / dim
    return _reconstruct(coefficients, sic.projectors, tol)


def purity_from_probs(p: ProbVector) -> float:
    """tr(ρ²) of the state a SIC probability vector represents.

    Equals d(d+1) Σ p_i² - 1.
    """
    dim = p.dim
    return dim * (dim + 1) * float(np.sum(p.entries ** 2)) - 1


def cond_prob_matrix(povm: Povm, sic: SicStructure) -> CondProbMatrix:
    """Conditional probabilities r(j, i) = tr(E_j Π_i): the probability of
    E_j after the Lüders update to Π_i.

    Raises:
        DimensionMismatch if the POVM and the SIC disagree on d.
        UncertifiedSic if `sic` is not certified.
    """
    require_certified(sic, povm.dim)
    entries = np.einsum("jab,iba->ji", povm.effects, sic.projectors).real
    return CondProbMatrix(povm.dim, _frozen(entries, dtype=float))


def _check_shapes(
    p: ProbVector, r: CondProbMatrix, dim: typing.Optional[int] = None
) -> int:
    dim = p.dim if dim is None else check_dim(dim)
    if p.dim != dim or r.dim != dim or r.cols != len(p.entries):
        raise ShapeMismatch(
            f"Probability vector of d={p.dim} ({len(p.entries)} entries) "
            f"and a {r.rows}×{r.cols} matrix of d={r.dim} do not fit "
            f"dimension {dim}"
        )
    return dim


def born_urgleichung(
    p: ProbVector, r: CondProbMatrix, dim: int
) -> OutcomeDistribution:
    """The Born rule on SIC probabilities.

    Q(E_j) = Σ_i [(d+1) p_i - 1/d] r(j, i).

    Computed from probabilities alone, without rebuilding ρ. Agrees with
    `born_direct` on the state `p` represents.

    Raises:
        ShapeMismatch if `p`, `r` and `dim` do not fit together.
    """
    dim = _check_shapes(p, r, dim)
    return make_distribution(r.entries @ ((dim + 1) * p.entries - 1 / dim))


def classical_ltp(p: ProbVector, r: CondProbMatrix) -> OutcomeDistribution:
    """The classical law of total probability, Q(j) = Σ_i p_i r(j, i).

    What an agent who ignores the quantum structure would compute.

    Raises:
        ShapeMismatch if `p` and `r` do not fit together.
    """
    _check_shapes(p, r)
    return make_distribution(r.entries @ p.entries)


def ltp_deviation(p: ProbVector, r: CondProbMatrix, dim: int) -> float:
    """The largest gap between the quantum and the classical rule.

    max_j |born_urgleichung(p, r)_j - classical_ltp(p, r)_j|, on the
    unclamped values.
    """
    quantum = born_urgleichung(p, r, dim)
    classical = classical_ltp(p, r)
    return float(np.max(np.abs(quantum.raw - classical.raw)))


def mic_duals(
    effects: typing.Sequence[np.ndarray], dim: int, tol: float = COMPARISON_TOL
) -> MicStructure:
    """Computes the dual frame of a minimal informationally complete POVM.

    dual_k = Σ_i (G⁻¹)_ki effect_i with G_ki = tr(effect_k effect_i); the
    system is solved, G is never inverted.

    Parameters:
        effects: d² positive effects summing to the identity.
        dim: The dimension d.
        tol: Allowed deviation of tr(dual_k effect_i) from δ_ki.

    Raises:
        NotHermitian, NotPositive, NotAPovm if `effects` is not a POVM.
        WrongCount if there are not d² effects.
        DimensionMismatch if the effects are not d×d.
        NotInformationallyComplete if the Gram matrix is singular.
    """
    dim = check_dim(dim)
    povm = validate_povm(effects)
    _check_same_dim(dim, povm.dim, "effect")
    count = dim * dim
    if povm.size != count:
        raise WrongCount(
            f"A MIC in dimension {dim} has {count} effects, got {povm.size}"
        )
    flat = povm.effects.reshape(count, count)
    # tr(E_k E_i) = Σ_ab (E_k)_ab conj((E_i)_ab) for Hermitian E_i
    gram = (flat @ flat.conj().T).real
    scale = 1 / np.sqrt(np.diag(gram))
    determinant = float(np.linalg.det(gram * np.outer(scale, scale)))
    if abs(determinant) <= GRAM_DETERMINANT_FLOOR:
        raise NotInformationallyComplete(determinant)
    duals = scipy.linalg.solve(gram, flat, assume_a="sym")
    duality = (duals @ flat.conj().T).real
    deviation = float(np.max(np.abs(duality - np.eye(count))))
    if deviation > tol:
        raise NotInformationallyComplete(
            determinant, f"dual frame is off by {deviation:.3e}"
        )
    logger.debug(
        "MIC in d=%d: scaled Gram determinant %.3e, duality error %.1e",
        dim,
        determinant,
        deviation,
    )
    return MicStructure(
        povm.effects, _frozen(duals.reshape(count, dim, dim)), determinant
    )


def orbit_mic(fiducial: Fiducial) -> MicStructure:
    """The WH orbit of any fiducial, used as a MIC.

    This needs no SIC: the orbit is informationally complete whenever all
    the overlaps ⟨ψ|D_{a,b}|ψ⟩ are nonzero. For a random vector some of
    them can be tiny in d ≥ 4, so prefer a frame-potential minimum, such
    as the best candidate of a search.

    Raises:
        NotInformationallyComplete if the scaled Gram determinant is at or
        below GRAM_DETERMINANT_FLOOR.
    """
    return mic_duals(orbit(fiducial).effects, fiducial.dim)


def perturbed_mic(
    sic: SicStructure,
    weight: float = 0.1,
    seed: typing.Optional[int] = None,
) -> MicStructure:
    """A MIC near a SIC: (1 - w) O_i + w R_i.

    Without a seed R_i = I/d², which is O_i + ε I/d renormalized to sum to
    the identity. With a seed {R_i} is a random POVM of d² outcomes. A
    mixture of two POVMs is a POVM, so no renormalization is needed.

    Raises:
        ValueError if `weight` is not in [0, 1).
    """
    require_certified(sic)
    if not 0 <= weight < 1:
        raise ValueError(f"weight must be in [0, 1), got {weight}")
    dim = sic.dim
    if seed is None:
        noise = np.broadcast_to(identity(dim) / dim ** 2, sic.effects.shape)
    else:
        noise = random_povm(dim, dim ** 2, seed).effects
    mixed = (1 - weight) * sic.effects + weight * noise
    return mic_duals(mixed, sic.dim)


def state_to_probs_mic(rho: DensityMatrix, mic: MicStructure) -> ProbVector:
    """p_i = tr(ρ E_i) for the MIC effects E_i.

    Raises:
        DimensionMismatch if the state and the MIC disagree on d.
    """
    _check_same_dim(rho.dim, mic.dim, "MIC")
    entries = np.einsum("ab,iba->i", rho.matrix, mic.effects).real
    return validate_probs(entries, rho.dim)


def probs_to_state_mic(
    p: ProbVector, mic: MicStructure, tol: float = COMPARISON_TOL
) -> DensityMatrix:
    """ρ = Σ_i p_i dual_i, the dual-frame reconstruction.

    Raises:
        DimensionMismatch if the vector and the MIC disagree on d.
        NotAQuantumState when the reconstruction is not positive.
    """
    _check_same_dim(p.dim, mic.dim, "MIC")
    return _reconstruct(p.entries, mic.duals, tol)


def mic_born_matrix(povm: Povm, mic: MicStructure) -> np.ndarray:
    """The matrix tr(E_j dual_i) taking MIC probabilities to Q(E_j).

    Unlike a CondProbMatrix, its entries may be negative.
    """
    _check_same_dim(mic.dim, povm.dim, "POVM")
    return np.einsum("jab,iba->ji", povm.effects, mic.duals).real


def born_urgleichung_mic(
    p: ProbVector, povm: Povm, mic: MicStructure
) -> OutcomeDistribution:
    """The Born rule from MIC probabilities: Q(E_j) = Σ_i p_i tr(E_j dual_i).

    Raises:
        DimensionMismatch if `p`, `povm` and `mic` disagree on d.
    """
    _check_same_dim(mic.dim, p.dim, "probability vector")
    return make_distribution(mic_born_matrix(povm, mic) @ p.entries)


def evolve_probs_mic(
    p: ProbVector, u: Unitary, mic: MicStructure, tol: float = VALIDITY_TOL
) -> ProbVector:
    """Unitary evolution of MIC probabilities.

    p'_j = Σ_i p_i tr(E_j U dual_i U†), the MIC vector of UρU†.

    Raises:
        DimensionMismatch if `p`, `u` and `mic` disagree on d.
    """
    _check_same_dim(mic.dim, p.dim, "probability vector")
    _check_same_dim(mic.dim, u.dim, "unitary")
    rotated = u.matrix @ mic.duals @ dagger(u.matrix)
    transfer = np.einsum("jab,iba->ji", mic.effects, rotated).real
    return validate_probs(transfer @ p.entries, p.dim, tol=tol, floor=tol)
