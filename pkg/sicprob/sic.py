"""Weyl–Heisenberg orbits and SIC structures.

A SIC is a set of d² rank-one projectors Π_i with

    tr(Π_k Π_l) = (d·δ_kl + 1) / (d + 1),

whose rescaled versions O_i = Π_i / d form a POVM. We generate candidate sets
as orbits of a fiducial vector under the d² Weyl–Heisenberg displacements

    D_{a,b} = τ^{ab} X^a Z^b,   τ = -exp(iπ/d),

with X the cyclic shift |k⟩ → |k+1 mod d⟩ and Z = diag(ω^k), ω = exp(2πi/d).

Example:
    from sicprob.sic import builtin_fiducial, orbit
    sic = orbit(builtin_fiducial(3))
    assert sic.certified
"""
import logging
import math
import typing

import numpy as np  # type: ignore

from .errors import (
    DimensionMismatch,
    InvalidFiducial,
    NoBuiltinForDimension,
    NotFinite,
    ShapeMismatch,
    UncertifiedSic,
    WrongCount,
)
from .quantum import (
    CONSTRUCTION_TOL,
    _frozen,
    check_dim,
    dagger,
    identity,
)

logger = logging.getLogger(__name__)

CERTIFICATION_TOL = 1e-8
"""Overlap residual at or below which a structure is a certified SIC."""
POVM_TOL = 1e-9
"""Allowed deviation of Σ Π_i / d from the identity in a certified SIC."""
GRAM_DETERMINANT_FLOOR = 1e-12
"""Gram determinants at or below this mean linearly dependent projectors."""
GAUGE_THRESHOLD = 1e-9
"""Components smaller than this are skipped when fixing the global phase."""
NORM_SLACK = 4e-15
"""Vectors whose norm is this close to one are not rescaled."""


def sic_overlap(dim: int) -> float:
    """The off-diagonal overlap tr(Π_k Π_l) = 1/(d+1) of a SIC."""
    return 1 / (dim + 1)


def minimum_frame_potential(dim: int) -> float:
    """d²(d²-1)/(d+1)², the frame potential of a SIC."""
    return dim ** 2 * (dim ** 2 - 1) / (dim + 1) ** 2


def wh_displacements(dim: int) -> np.ndarray:
    """The d² Weyl–Heisenberg displacement operators.

    Parameters:
        dim: The Hilbert-space dimension d.

    Returns:
        A read-only (d², d, d) array; entry a·d + b is D_{a,b}, so D_{0,0}
        comes first and equals the identity.
    """
    dim = check_dim(dim)
    shift = np.roll(identity(dim), 1, axis=0)
    omega = np.exp(2j * np.pi / dim)
    clock = np.diag(omega ** np.arange(dim))
    tau = -np.exp(1j * np.pi / dim)
    displacements = np.empty((dim * dim, dim, dim), dtype=complex)
    shift_power = identity(dim)
    for a in range(dim):
        clock_power = identity(dim)
        for b in range(dim):
            displacements[a * dim + b] = (
                tau ** (a * b) * shift_power @ clock_power
            )
            clock_power = clock_power @ clock
        shift_power = shift_power @ shift
    return _frozen(displacements)


class Fiducial(typing.NamedTuple):
    """A unit vector whose WH orbit is a candidate SIC.

    The global phase is fixed: the first component with modulus above
    `GAUGE_THRESHOLD` is real and nonnegative. Use `Fiducial.from_vector` to
    normalize and gauge-fix an arbitrary vector.
    """

    vector: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.vector)

    @classmethod
    def from_vector(cls, vector: typing.Sequence[complex]) -> "Fiducial":
        """Normalizes `vector` and fixes its global phase.

        Applied to the vector of an existing fiducial it returns that
        fiducial bit for bit.

        Raises:
            InvalidFiducial if `vector` is not one-dimensional or is zero.
            InvalidDimension if it has fewer than two components.
            NotFinite if a component is NaN or infinite.
        """
        vector = np.asarray(vector, dtype=complex)
        if vector.ndim != 1:
            raise InvalidFiducial(f"Expected a vector, got {vector.shape}")
        check_dim(len(vector))
        if not np.all(np.isfinite(vector)):
            raise NotFinite("A fiducial vector must be finite.")
        norm = np.linalg.norm(vector)
        if not norm > 0:
            raise InvalidFiducial("A fiducial vector cannot be zero.")
        if abs(norm - 1) > NORM_SLACK:
            vector = vector / norm
        index = int(np.argmax(np.abs(vector) > GAUGE_THRESHOLD))
        leading = vector[index]
        vector = vector * (np.conj(leading) / abs(leading))
        # exactly real, not just to rounding
        vector[index] = abs(leading)
        return cls(_frozen(vector))


def validate_fiducial(
    fiducial: Fiducial, tol: float = CONSTRUCTION_TOL
) -> Fiducial:
    """Checks the unit norm and the gauge of an existing fiducial.

    Raises:
        InvalidFiducial if either invariant fails.
    """
    vector = np.asarray(fiducial.vector)
    check_dim(len(vector))
    deviation = abs(np.vdot(vector, vector).real - 1)
    if deviation > tol:
        raise InvalidFiducial(f"Fiducial norm² is off by {deviation:.3e}")
    leading = vector[np.argmax(np.abs(vector) > GAUGE_THRESHOLD)]
    if abs(leading.imag) > tol or leading.real < 0:
        raise InvalidFiducial(f"Fiducial is not gauge-fixed: {leading}")
    return fiducial


class SicReport(typing.NamedTuple):
    """Where a candidate SIC deviates the most from equal overlaps.

    `gram_determinant` is det[tr(Π_k Π_l)]; it vanishes when the projectors
    are linearly dependent.
    """

    worst_pair: typing.Tuple[int, int]
    worst_overlap: float
    expected_overlap: float
    gram_determinant: float


class SicVerification(typing.NamedTuple):
    residual: float
    povm_deviation: float
    report: SicReport


class SicStructure(typing.NamedTuple):
    """A candidate SIC: d² projectors Π_i and their effects O_i = Π_i/d.

    Both projectors and effects are kept: the probability formulas use Π_i,
    the measurement is the POVM {O_i}.

    Attributes:
        fiducial: The generating fiducial, or None for a hand-supplied set.
        projectors: (d², d, d) array of the Π_i.
        effects: (d², d, d) array of the O_i.
        verification: The overlap and completeness check of the projectors.
    """

    fiducial: typing.Optional[Fiducial]
    projectors: np.ndarray
    effects: np.ndarray
    verification: SicVerification

    @property
    def dim(self) -> int:
        return self.projectors.shape[1]

    @property
    def residual(self) -> float:
        return self.verification.residual

    @property
    def certified(self) -> bool:
        return (
            self.verification.residual <= CERTIFICATION_TOL
            and self.verification.povm_deviation <= POVM_TOL
            and self.verification.report.gram_determinant
            > GRAM_DETERMINANT_FLOOR
        )


def require_certified(
    sic: SicStructure, dim: typing.Optional[int] = None
) -> SicStructure:
    """Checks that `sic` is certified and, optionally, of dimension `dim`.

    Raises:
        DimensionMismatch if `dim` is given and differs.
        UncertifiedSic if the residual or the POVM deviation is above its
        bound, or the projectors are linearly dependent.
    """
    if dim is not None and sic.dim != dim:
        raise DimensionMismatch(dim, sic.dim, "SIC")
    if not sic.certified:
        raise UncertifiedSic(
            f"SIC residual {sic.residual:.3e} / POVM deviation "
            f"{sic.verification.povm_deviation:.3e} exceed the "
            f"certification bounds {CERTIFICATION_TOL:.0e}/{POVM_TOL:.0e}, "
            "or its Gram determinant "
            f"{sic.verification.report.gram_determinant:.3e} is too small"
        )
    return sic


def verify_sic(projectors: np.ndarray, dim: int) -> SicVerification:
    """Measures how far a set of projectors is from being a SIC.

    Parameters:
        projectors: d² matrices of size d×d.
        dim: The dimension d.

    Returns:
        `residual`, the largest |tr(Π_k Π_l) - (d·δ_kl + 1)/(d + 1)|,
        `povm_deviation`, the largest entry of |Σ Π_i / d - I|, and a report
        naming the worst (k, l) pair (ties resolve to the first pair in
        row-major order) along with the determinant of the overlap matrix.

    Raises:
        WrongCount if there are not exactly d² projectors.
        DimensionMismatch if the projectors are not d×d.
        NotFinite if an entry is NaN or infinite.
    """
    dim = check_dim(dim)
    projectors = np.asarray(projectors, dtype=complex)
    if projectors.ndim != 3:
        raise ShapeMismatch(f"Expected a list of matrices: {projectors.shape}")
    if not np.all(np.isfinite(projectors)):
        raise NotFinite("Projectors must have finite entries")
    if projectors.shape[0] != dim * dim:
        raise WrongCount(
            f"A SIC in dimension {dim} has {dim * dim} projectors, "
            f"got {projectors.shape[0]}"
        )
    if projectors.shape[1:] != (dim, dim):
        raise DimensionMismatch(dim, projectors.shape[1], "projector")
    overlaps = np.einsum("kab,lba->kl", projectors, projectors).real
    expected = (dim * np.eye(dim * dim) + 1) / (dim + 1)
    deviations = np.abs(overlaps - expected)
    worst = np.unravel_index(np.argmax(deviations), deviations.shape)
    worst_pair = (int(worst[0]), int(worst[1]))
    povm_deviation = float(
        np.max(np.abs(projectors.sum(axis=0) / dim - identity(dim)))
    )
    report = SicReport(
        worst_pair,
        float(overlaps[worst_pair]),
        float(expected[worst_pair]),
        float(np.linalg.det(overlaps)),
    )
    residual = float(deviations[worst_pair])
    return SicVerification(residual, povm_deviation, report)


def orbit(fiducial: Fiducial) -> SicStructure:
    """The Weyl–Heisenberg orbit of a fiducial, as a candidate SIC.

    Π_{a,b} = D_{a,b}|ψ⟩⟨ψ|D_{a,b}†. The structure is returned whatever
    its residual, so callers must check `certified` themselves.
    """
    validate_fiducial(fiducial)
    kets = wh_displacements(fiducial.dim) @ fiducial.vector
    projectors = np.einsum("ka,kb->kab", kets, kets.conj())
    return SicStructure(
        fiducial,
        _frozen(projectors),
        _frozen(projectors / fiducial.dim),
        verify_sic(projectors, fiducial.dim),
    )


def sic_from_projectors(
    projectors: np.ndarray, dim: int, tol: float = 1e-9
) -> SicStructure:
    """Builds a SIC structure from a hand-supplied set of projectors.

    Such sets need not be WH orbits in our gauge. Every projector must be
    Hermitian, idempotent and of unit trace (so rank one) within `tol`; the
    SIC conditions themselves are measured, not required, so check
    `certified` before use.

    Raises:
        WrongCount, DimensionMismatch as `verify_sic`.
        UncertifiedSic if some matrix is not a rank-one projector.
    """
    verification = verify_sic(projectors, dim)
    projectors = np.asarray(projectors, dtype=complex)
    for index, projector in enumerate(projectors):
        deviation = max(
            float(np.max(np.abs(projector - dagger(projector)))),
            float(np.max(np.abs(projector @ projector - projector))),
            abs(np.trace(projector) - 1),
        )
        if deviation > tol:
            raise UncertifiedSic(
                f"Matrix {index} is not a rank-one projector "
                f"(off by {deviation:.3e})"
            )
    return SicStructure(
        None,
        _frozen(projectors),
        _frozen(projectors / dim),
        verification,
    )


_BUILTIN_FIDUCIALS: typing.Dict[int, typing.Callable[[], typing.List[complex]]]
_BUILTIN_FIDUCIALS = {
    # Bloch vector (1, 1, 1)/√3, the vertex of a regular tetrahedron
    2: lambda: [
        math.sqrt((1 + 1 / math.sqrt(3)) / 2),
        np.exp(1j * np.pi / 4) * math.sqrt((1 - 1 / math.sqrt(3)) / 2),
    ],
    3: lambda: [0, 1 / math.sqrt(2), -1 / math.sqrt(2)],
}


def builtin_fiducial(dim: int) -> Fiducial:
    """A known SIC fiducial for d = 2 or d = 3.

    Raises:
        NoBuiltinForDimension for any other dimension.
    """
    dim = check_dim(dim)
    try:
        components = _BUILTIN_FIDUCIALS[dim]()
    except KeyError:
        raise NoBuiltinForDimension(dim) from None
    return Fiducial.from_vector(components)


def builtin_dimensions() -> typing.Tuple[int, ...]:
    return tuple(sorted(_BUILTIN_FIDUCIALS))


class _WhAction(typing.NamedTuple):
    """The WH group acting on one vector ψ, phases τ^{ab} dropped.

    overlaps[a, b] = ⟨ψ|X^a Z^b|ψ⟩, shifted[a, b] = X^a Z^b ψ and
    shifted_back[a, b] = (X^a Z^b)† ψ. The τ phases cancel from every
    quantity computed from these.
    """

    overlaps: np.ndarray
    shifted: np.ndarray
    shifted_back: np.ndarray


def _wh_action(vector: np.ndarray) -> _WhAction:
    # X^a Z^b is a monomial matrix, so this is O(d³) without building it
    dim = len(vector)
    a = np.arange(dim)[:, None]
    k = np.arange(dim)[None, :]
    back = (k - a) % dim
    forward = (k + a) % dim
    b = np.arange(dim)[None, :, None]
    omega = 2j * np.pi / dim
    shifted = np.exp(omega * b * back[:, None, :]) * vector[back][:, None, :]
    shifted_back = (
        np.exp(-omega * b * k[:, None, :]) * vector[forward][:, None, :]
    )
    overlaps = np.einsum("k,abk->ab", vector.conj(), shifted)
    return _WhAction(overlaps, shifted, shifted_back)


def _nontrivial(dim: int) -> np.ndarray:
    mask = np.ones((dim, dim), dtype=bool)
    mask[0, 0] = False
    return mask


def frame_potential_and_gradient(
    vector: np.ndarray,
) -> typing.Tuple[float, np.ndarray]:
    """The frame potential of a vector's orbit and its gradient.

    F(ψ) = d² Σ_{(a,b)≠(0,0)} |⟨ψ|D_{a,b}|ψ⟩|⁴, which equals the sum of
    |⟨ψ_k|ψ_l⟩|⁴ over ordered pairs k ≠ l of the orbit. ψ is used as given,
    without normalizing.

    Parameters:
        vector: The d complex components of ψ.

    Returns:
        `F, gradient`, where `gradient` is the length-2d real vector of
        ∂F/∂Re ψ followed by ∂F/∂Im ψ.
    """
    vector = np.asarray(vector, dtype=complex)
    dim = len(vector)
    action = _wh_action(vector)
    mask = _nontrivial(dim)
    overlaps = action.overlaps[mask]
    squared = np.abs(overlaps) ** 2
    potential = dim ** 2 * float(np.sum(squared ** 2))
    # ∂|c|⁴/∂ψ̄ = 2|c|²(c̄ Dψ + c D†ψ); the real gradient is twice that
    directions = (
        overlaps.conj()[:, None] * action.shifted[mask]
        + overlaps[:, None] * action.shifted_back[mask]
    )
    gradient = 4 * dim ** 2 * np.sum(squared[:, None] * directions, axis=0)
    return potential, np.concatenate([gradient.real, gradient.imag])


def frame_potential(fiducial: Fiducial) -> float:
    """Σ_{k≠l} |⟨ψ_k|ψ_l⟩|⁴ over the WH orbit of `fiducial`.

    At least d²(d²-1)/(d+1)², with equality exactly for SIC fiducials.
    """
    validate_fiducial(fiducial)
    return frame_potential_and_gradient(fiducial.vector)[0]


def frame_potential_gap(vector: np.ndarray) -> float:
    """F(ψ) - d²(d²-1)/(d+1)² for a unit vector ψ.

    On the unit sphere this is exactly d² Σ (|⟨ψ|D_{a,b}|ψ⟩|² - 1/(d+1))²
    over (a,b) ≠ (0,0), a sum of squares that keeps full relative precision
    as the gap goes to zero.
    """
    vector = np.asarray(vector, dtype=complex)
    dim = len(vector)
    squared = np.abs(_wh_action(vector).overlaps[_nontrivial(dim)]) ** 2
    return dim ** 2 * float(np.sum((squared - sic_overlap(dim)) ** 2))


def overlap_residual(vector: np.ndarray) -> float:
    """The overlap residual of the orbit of ψ, from its d² overlaps alone.

    Agrees with `verify_sic(orbit(...).projectors)` up to rounding.
    """
    vector = np.asarray(vector, dtype=complex)
    dim = len(vector)
    squared = np.abs(_wh_action(vector).overlaps[_nontrivial(dim)]) ** 2
    diagonal = abs(np.vdot(vector, vector).real ** 2 - 1)
    return max(diagonal, float(np.max(np.abs(squared - sic_overlap(dim)))))
