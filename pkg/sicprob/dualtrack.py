"""Runs circuits twice: on density matrices and on probability vectors.

A circuit is an initial state, a sequence of unitaries and a final
measurement. The amplitude track evolves ρ → UρU† and applies the Born
rule. The probability track never builds ρ: each unitary acts on the SIC
probability vector through

    Q_j = (d+1) Σ_i p_i r(j, i) - 1/d,

with r the conditional probabilities of a unitarily rotated SIC, and the
final measurement uses the probability form of the Born rule. Both tracks
must agree to rounding error.

Example:
    from sicprob import dualtrack, quantum, sic
    structure = sic.orbit(sic.builtin_fiducial(2))
    circuit = dualtrack.Circuit(
        dim=2,
        initial=quantum.random_density(2, seed=0),
        steps=(dualtrack.CircuitStep(quantum.random_unitary(2, seed=1)),),
        final_measurement=dualtrack.SIC_READOUT,
    )
    report = dualtrack.run_dual(circuit, structure)
    assert report.max_abs_deviation < 1e-9
"""
import logging
import typing

import numpy as np  # type: ignore

from .errors import DimensionMismatch, SchemaError
from .quantum import (
    COMPARISON_TOL,
    VALIDITY_TOL,
    DensityMatrix,
    OutcomeDistribution,
    Povm,
    Unitary,
    _frozen,
    born_direct,
    dagger,
    hermitize,
    make_distribution,
    validate_density,
    validate_povm,
)
from .sic import SicStructure, require_certified
from .urgleichung import (
    MicStructure,
    ProbVector,
    born_urgleichung,
    born_urgleichung_mic,
    cond_prob_matrix,
    evolve_probs_mic,
    probs_to_state,
    probs_to_state_mic,
    state_to_probs,
    state_to_probs_mic,
    validate_probs,
)

logger = logging.getLogger(__name__)

SIC_READOUT = "sic"
"""Final measurement that reads out the probability vector itself."""

Representation = typing.Union[SicStructure, MicStructure]
Measurement = typing.Union[Povm, str]


class CircuitStep(typing.NamedTuple):
    """One unitary of a circuit, with an optional label such as a time."""

    unitary: Unitary
    label: typing.Optional[str] = None


class Circuit(typing.NamedTuple):
    """A flat sequence of unitaries between a state and a measurement.

    Attributes:
        dim: The Hilbert-space dimension.
        initial: A DensityMatrix, or a ProbVector in the representation the
            circuit is run with.
        steps: The unitaries, applied in order. May be empty.
        final_measurement: A Povm, or `SIC_READOUT`.
    """

    dim: int
    initial: typing.Union[DensityMatrix, ProbVector]
    steps: typing.Tuple[CircuitStep, ...]
    final_measurement: Measurement


class TrackReport(typing.NamedTuple):
    """The outcome of both tracks and how far apart they ended up.

    Attributes:
        per_step_deviations: After each step, the largest difference
            between the probability-track vector and the amplitude-track
            state converted to probabilities.
        representation: "sic" or "mic", the probability representation.
    """

    amplitude_outcome: OutcomeDistribution
    probability_outcome: OutcomeDistribution
    max_abs_deviation: float
    per_step_deviations: typing.Tuple[float, ...]
    representation: str


class TransferMap(typing.NamedTuple):
    """The affine map p → M p + offset·1 of one unitary on SIC vectors."""

    matrix: np.ndarray
    offset: float

    def apply(self, entries: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(entries) + self.offset

    def compose(self, later: "TransferMap") -> "TransferMap":
        """The map that applies `self` first, then `later`.

        Exact on every vector with Σ p = 1: there later(offset·1) equals
        offset·(later.matrix 1)(1ᵀp) + later.offset, whatever the row sums.
        """
        row_sums = later.matrix.sum(axis=1)
        ones = np.ones(self.matrix.shape[1])
        matrix = later.matrix @ self.matrix
        matrix = matrix + self.offset * np.outer(row_sums, ones)
        return TransferMap(_frozen(matrix, dtype=float), later.offset)

    def as_linear(self) -> np.ndarray:
        """M + offset·J, which agrees with the map wherever Σ p = 1."""
        return self.matrix + self.offset


def representation_name(representation: Representation) -> str:
    return "sic" if isinstance(representation, SicStructure) else "mic"


def _check_dim(expected: int, got: int, what: str):
    if expected != got:
        raise DimensionMismatch(expected, got, what)


def rotate_sic(u: Unitary, sic: SicStructure) -> Povm:
    """The SIC measurement rotated by U, E_j = (1/d) U Π_j U†.

    Raises:
        DimensionMismatch if `u` and `sic` disagree on d.
        UncertifiedSic if `sic` is not certified.
    """
    require_certified(sic, u.dim)
    rotated = u.matrix @ sic.effects @ dagger(u.matrix)
    return validate_povm(hermitize(rotated))


def _evolution_cond_probs(u: Unitary, sic: SicStructure) -> np.ndarray:
    # measuring the SIC rotated by U† now is measuring the SIC after U
    return cond_prob_matrix(rotate_sic(u.adjoint(), sic), sic).entries


def evolve_probs(
    p: ProbVector, u: Unitary, sic: SicStructure, tol: float = VALIDITY_TOL
) -> ProbVector:
    """Unitary evolution of a SIC vector, Q_j = (d+1) Σ_i p_i r(j, i) - 1/d.

    When p represents ρ, Q represents UρU†.

    Parameters:
        p: The SIC vector before the evolution.
        u: The unitary.
        sic: A certified SIC.
        tol: Allowed deviation of the result from a probability vector.

    Raises:
        DimensionMismatch if `p`, `u` and `sic` disagree on d.
    """
    _check_dim(p.dim, u.dim, "unitary")
    dim = p.dim
    r = _evolution_cond_probs(u, sic)
    entries = (dim + 1) * (r @ p.entries) - 1 / dim
    return validate_probs(entries, dim, tol=tol, floor=tol)


def evolve_state(rho: DensityMatrix, u: Unitary) -> DensityMatrix:
    """Unitary evolution of a density matrix, ρ' = UρU†.

    Raises:
        DimensionMismatch if `rho` and `u` disagree on d.
    """
    _check_dim(rho.dim, u.dim, "unitary")
    return validate_density(
        hermitize(u.matrix @ rho.matrix @ dagger(u.matrix))
    )


def transfer_matrix(u: Unitary, sic: SicStructure) -> TransferMap:
    """`evolve_probs` as an affine map.

    M_ji = (d+1) r(j, i) with offset -1/d.

    Raises:
        DimensionMismatch if `u` and `sic` disagree on d.
        UncertifiedSic if `sic` is not certified.
    """
    dim = u.dim
    r = _evolution_cond_probs(u, sic)
    return TransferMap(_frozen((dim + 1) * r, dtype=float), -1 / dim)


def to_probs(rho: DensityMatrix, rep: Representation) -> ProbVector:
    """p_i = (1/d) tr(ρ Π_i) for a SIC, p_i = tr(ρ E_i) for a MIC."""
    if isinstance(rep, SicStructure):
        return state_to_probs(rho, rep)
    return state_to_probs_mic(rho, rep)


def to_state(
    p: ProbVector, rep: Representation, tol: float = COMPARISON_TOL
) -> DensityMatrix:
    """The SIC reconstruction formula, or the dual-frame sum for a MIC.

    Raises:
        NotAQuantumState if `p` represents no state.
    """
    if isinstance(rep, SicStructure):
        return probs_to_state(p, rep, tol)
    return probs_to_state_mic(p, rep, tol)


def _evolve(p: ProbVector, u: Unitary, rep: Representation) -> ProbVector:
    if isinstance(rep, SicStructure):
        return evolve_probs(p, u, rep)
    return evolve_probs_mic(p, u, rep)


def validate_circuit(circuit: Circuit, rep: Representation) -> Circuit:
    """Checks that every part of `circuit` lives in `circuit.dim`.

    Raises:
        DimensionMismatch for any part in another dimension.
        SchemaError for an unknown final measurement.
    """
    dim = circuit.dim
    _check_dim(dim, rep.dim, representation_name(rep).upper())
    _check_dim(dim, circuit.initial.dim, "initial state")
    for step in circuit.steps:
        _check_dim(dim, step.unitary.dim, "unitary")
    final = circuit.final_measurement
    if isinstance(final, Povm):
        _check_dim(dim, final.dim, "final POVM")
    elif final != SIC_READOUT:
        raise SchemaError(f"Unknown final measurement {final!r}")
    if isinstance(rep, SicStructure):
        require_certified(rep)
    return circuit


def _initial_pair(
    circuit: Circuit, rep: Representation
) -> typing.Tuple[DensityMatrix, ProbVector]:
    initial = circuit.initial
    if isinstance(initial, ProbVector):
        # raises NotAQuantumState for a vector outside the state space
        return to_state(initial, rep), initial
    return initial, to_probs(initial, rep)


def amplitude_readout(
    rho: DensityMatrix, final: Measurement, rep: Representation
) -> OutcomeDistribution:
    if isinstance(final, Povm):
        return born_direct(rho, final)
    return make_distribution(to_probs(rho, rep).entries)


def probability_readout(
    p: ProbVector, final: Measurement, rep: Representation
) -> OutcomeDistribution:
    if not isinstance(final, Povm):
        return make_distribution(p.entries)
    if isinstance(rep, SicStructure):
        return born_urgleichung(p, cond_prob_matrix(final, rep), p.dim)
    return born_urgleichung_mic(p, final, rep)


def _max_gap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def run_dual(circuit: Circuit, rep: Representation) -> TrackReport:
    """Runs `circuit` on both tracks and compares them.

    Parameters:
        circuit: The circuit.
        rep: A certified SIC, or a MIC when no SIC is at hand.

    Returns:
        Both outcomes, their largest difference and the per-step
        differences of the states.

    Raises:
        DimensionMismatch if the parts of the circuit disagree on d.
        NotAQuantumState if the initial vector represents no state.
    """
    validate_circuit(circuit, rep)
    rho, p = _initial_pair(circuit, rep)
    deviations = []
    for number, step in enumerate(circuit.steps):
        rho = evolve_state(rho, step.unitary)
        p = _evolve(p, step.unitary, rep)
        deviation = _max_gap(to_probs(rho, rep).entries, p.entries)
        logger.debug(
            "step %d (%s): track deviation %.3e",
            number,
            step.label or "-",
            deviation,
        )
        deviations.append(deviation)
    final = circuit.final_measurement
    amplitude = amplitude_readout(rho, final, rep)
    probability = probability_readout(p, final, rep)
    return TrackReport(
        amplitude_outcome=amplitude,
        probability_outcome=probability,
        max_abs_deviation=_max_gap(amplitude.raw, probability.raw),
        per_step_deviations=tuple(deviations),
        representation=representation_name(rep),
    )


def run_amplitude(
    circuit: Circuit, rep: Representation
) -> OutcomeDistribution:
    """Runs only the density-matrix track.

    `rep` is needed to convert a probability-vector initial state and for
    the SIC readout.
    """
    validate_circuit(circuit, rep)
    rho, _ = _initial_pair(circuit, rep)
    for step in circuit.steps:
        rho = evolve_state(rho, step.unitary)
    return amplitude_readout(rho, circuit.final_measurement, rep)


def run_probability(
    circuit: Circuit, rep: Representation
) -> OutcomeDistribution:
    """Runs only the probability track, converting a density-matrix
    initial state to probabilities first."""
    validate_circuit(circuit, rep)
    initial = circuit.initial
    if isinstance(initial, ProbVector):
        to_state(initial, rep)
        p = initial
    else:
        p = to_probs(initial, rep)
    for step in circuit.steps:
        p = _evolve(p, step.unitary, rep)
    return probability_readout(p, circuit.final_measurement, rep)
