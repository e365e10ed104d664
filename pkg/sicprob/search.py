"""Numerical search for SIC fiducials.

Minimizes the frame potential of the Weyl–Heisenberg orbit over unit
vectors, by projected gradient descent with backtracking, from seeded
random starting points, with a short Gauss-Newton refinement at the end.
A restart succeeds when the overlap residual of its orbit reaches the
target and the orbit is a certified SIC; the first successful restart
(lowest index) wins, which keeps the outcome independent of how restarts
are scheduled.

Example:
    from sicprob.search import SearchConfig, search
    result = search(SearchConfig(dim=4, seed=0), jobs=4)
    if result.found:
        print(result.fiducial.vector)
"""
import contextlib
import enum
import functools
import logging
import multiprocessing
import typing

import numpy as np  # type: ignore
import scipy.linalg  # type: ignore

from .errors import DimensionMismatch, InvalidSearchConfig
from .quantum import check_dim
from .sic import (
    Fiducial,
    _nontrivial,
    _wh_action,
    frame_potential,
    frame_potential_and_gradient,
    frame_potential_gap,
    orbit,
    sic_overlap,
    validate_fiducial,
)

logger = logging.getLogger(__name__)


class SearchConfig(typing.NamedTuple):
    """Parameters of a fiducial search.

    Attributes:
        dim: The Hilbert-space dimension.
        seed: Restart i starts from a vector drawn with seed `seed + i`.
        max_restarts: How many random starting points to try.
        max_iterations: Trial steps allowed per restart.
        target_residual: Overlap residual that counts as found.
        initial_step: Largest step length of the line search.
        shrink_factor: Step multiplier after a rejected step; its inverse
            is applied after an accepted one.
        min_step: A restart gives up once the step falls below this.
        gradient_tolerance: A restart stops at a critical point whose
            tangent gradient norm is below this.
        sufficient_decrease: Armijo constant of the line search.
        polish_residual: Once `target_residual` is met, Gauss-Newton steps
            refine the overlaps until the residual falls below this.
        polish_iterations: Most Gauss-Newton steps per restart.
    """

    dim: int
    seed: int = 0
    max_restarts: int = 64
    max_iterations: int = 20000
    target_residual: float = 1e-9
    initial_step: float = 0.1
    shrink_factor: float = 0.5
    min_step: float = 1e-12
    gradient_tolerance: float = 1e-12
    sufficient_decrease: float = 1e-4
    polish_residual: float = 1e-13
    polish_iterations: int = 8

    def validate(self) -> "SearchConfig":
        """Checks the parameters.

        Raises:
            InvalidDimension for a bad `dim`.
            InvalidSearchConfig for any other bad parameter.
        """
        check_dim(self.dim)
        if self.max_restarts < 1:
            raise InvalidSearchConfig(
                f"max_restarts must be at least 1, got {self.max_restarts}"
            )
        if self.max_iterations < 1:
            raise InvalidSearchConfig(
                "max_iterations must be at least 1, got "
                f"{self.max_iterations}"
            )
        if not self.target_residual > 0:
            raise InvalidSearchConfig(
                f"target_residual must be positive: {self.target_residual}"
            )
        if not 0 < self.shrink_factor < 1:
            raise InvalidSearchConfig(
                f"shrink_factor must be in (0, 1): {self.shrink_factor}"
            )
        if not 0 < self.min_step <= self.initial_step:
            raise InvalidSearchConfig(
                "Need 0 < min_step <= initial_step, got "
                f"{self.min_step} and {self.initial_step}"
            )
        if not self.polish_residual > 0:
            raise InvalidSearchConfig(
                f"polish_residual must be positive: {self.polish_residual}"
            )
        if self.polish_iterations < 0:
            raise InvalidSearchConfig(
                "polish_iterations must be nonnegative, got "
                f"{self.polish_iterations}"
            )
        if self.seed < 0:
            raise InvalidSearchConfig(f"seed must be nonnegative: {self.seed}")
        return self


class SearchStatus(enum.Enum):
    FOUND = "found"
    NOT_FOUND = "not_found"


class LocalMinimum(typing.NamedTuple):
    fiducial: Fiducial
    frame_potential: float
    iterations: int


class RestartOutcome(typing.NamedTuple):
    index: int
    fiducial: Fiducial
    residual: float
    gap: float
    iterations: int
    found: bool


class SearchResult(typing.NamedTuple):
    """The outcome of `search`.

    Attributes:
        status: FOUND or NOT_FOUND. NOT_FOUND is a result, not an error.
        fiducial: The certified fiducial when found, else None.
        residual: Overlap residual of the winning (or best) restart.
        frame_potential_gap: Its frame potential minus the SIC minimum.
        restarts_used: Restarts up to and including the winner.
        iterations_used: Iterations summed over those restarts.
        candidate: The best fiducial seen, found or not.
    """

    dim: int
    status: SearchStatus
    fiducial: typing.Optional[Fiducial]
    residual: float
    frame_potential_gap: float
    restarts_used: int
    iterations_used: int
    seed: int
    candidate: Fiducial

    @property
    def found(self) -> bool:
        return self.status is SearchStatus.FOUND


def _gap_and_residual(vector: np.ndarray) -> typing.Tuple[float, float]:
    dim = len(vector)
    squared = np.abs(_wh_action(vector).overlaps[_nontrivial(dim)]) ** 2
    deviations = squared - sic_overlap(dim)
    return (
        dim ** 2 * float(np.sum(deviations ** 2)),
        float(np.max(np.abs(deviations))),
    )


def _tangent_gradient(vector: np.ndarray) -> np.ndarray:
    """The frame-potential gradient, as a complex vector along the sphere."""
    dim = len(vector)
    _, gradient = frame_potential_and_gradient(vector)
    gradient = gradient[:dim] + 1j * gradient[dim:]
    # remove the radial part, Re⟨ψ, g⟩ ψ, in the real inner product
    return gradient - np.vdot(vector, gradient).real * vector


def _overlap_equations(
    vector: np.ndarray,
) -> typing.Tuple[np.ndarray, np.ndarray]:
    """Residuals |⟨ψ|D_k|ψ⟩|² - 1/(d+1) and |ψ|² - 1, with their Jacobian
    in the real coordinates (Re ψ, Im ψ)."""
    dim = len(vector)
    action = _wh_action(vector)
    mask = _nontrivial(dim)
    overlaps = action.overlaps[mask]
    # ∂|c|²/∂ψ̄ = c̄ Dψ + c D†ψ
    directions = (
        overlaps.conj()[:, None] * action.shifted[mask]
        + overlaps[:, None] * action.shifted_back[mask]
    )
    values = np.append(
        np.abs(overlaps) ** 2 - sic_overlap(dim),
        np.vdot(vector, vector).real - 1,
    )
    jacobian = 2 * np.vstack(
        [
            np.hstack([directions.real, directions.imag]),
            np.concatenate([vector.real, vector.imag]),
        ]
    )
    return values, jacobian


def _polish(
    vector: np.ndarray,
    gap: float,
    residual: float,
    config: SearchConfig,
    callback: typing.Optional[typing.Callable[[float], None]] = None,
) -> typing.Tuple[np.ndarray, float, float]:
    """Gauss-Newton refinement of a near-SIC vector.

    Steps are kept only when they lower the frame-potential gap, so the
    sequence of gaps stays monotone.
    """
    dim = len(vector)
    for _ in range(config.polish_iterations):
        if residual <= config.polish_residual:
            break
        values, jacobian = _overlap_equations(vector)
        step = scipy.linalg.lstsq(jacobian, -values)[0]
        candidate = vector + step[:dim] + 1j * step[dim:]
        candidate /= np.linalg.norm(candidate)
        candidate_gap, candidate_residual = _gap_and_residual(candidate)
        if not candidate_gap < gap:
            break
        vector, gap, residual = candidate, candidate_gap, candidate_residual
        if callback is not None:
            callback(gap)
    logger.debug("polished to residual %.3e", residual)
    return vector, gap, residual


def local_minimize(
    start: Fiducial,
    config: SearchConfig,
    callback: typing.Optional[typing.Callable[[float], None]] = None,
) -> LocalMinimum:
    """Descends the frame potential from `start` on the unit sphere.

    Each iteration tries one step against the tangent gradient, renormalizes
    and accepts it when the frame potential decreases enough (Armijo rule);
    a rejected step shrinks the step length, an accepted one grows it back
    up to `initial_step`. The frame potential of accepted iterates never
    increases.

    Once the target residual is met, a few Gauss-Newton steps on the
    overlap equations drive the residual towards `polish_residual`; they
    are not counted as iterations.

    Parameters:
        start: The starting fiducial.
        config: Step policy and stopping rules.
        callback: Called with the frame-potential gap of every accepted
            iterate, in order.

    Returns:
        `fiducial, frame_potential, iterations`, the fiducial gauge-fixed.

    Raises:
        DimensionMismatch if `start` is not in `config.dim` dimensions.
    """
    config.validate()
    validate_fiducial(start)
    if start.dim != config.dim:
        raise DimensionMismatch(config.dim, start.dim, "fiducial")
    vector = np.array(start.vector, dtype=complex)
    gap, residual = _gap_and_residual(vector)
    step = config.initial_step
    iterations = 0
    stalled = False
    while (
        not stalled
        and iterations < config.max_iterations
        and residual > config.target_residual
    ):
        descent = _tangent_gradient(vector)
        slope = float(np.vdot(descent, descent).real)
        if np.sqrt(slope) < config.gradient_tolerance:
            break
        while iterations < config.max_iterations:
            iterations += 1
            candidate = vector - step * descent
            candidate /= np.linalg.norm(candidate)
            candidate_gap, candidate_residual = _gap_and_residual(candidate)
            decrease = config.sufficient_decrease * step * slope
            if candidate_gap <= gap - decrease:
                vector, gap = candidate, candidate_gap
                residual = candidate_residual
                if callback is not None:
                    callback(gap)
                step = min(step / config.shrink_factor, config.initial_step)
                break
            step *= config.shrink_factor
            if step < config.min_step:
                stalled = True
                break
    if residual <= config.target_residual:
        vector, gap, residual = _polish(
            vector, gap, residual, config, callback
        )
    fiducial = Fiducial.from_vector(vector)
    return LocalMinimum(fiducial, frame_potential(fiducial), iterations)


def random_start(dim: int, seed: int) -> Fiducial:
    """A seeded uniformly random unit vector, gauge-fixed."""
    rng = np.random.default_rng(seed)
    return Fiducial.from_vector(
        rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    )


def run_restart(config: SearchConfig, index: int) -> RestartOutcome:
    """Runs restart number `index` of a search.

    The result depends only on `config` and `index`.
    """
    start = random_start(config.dim, config.seed + index)
    minimum = local_minimize(start, config)
    structure = orbit(minimum.fiducial)
    residual = structure.residual
    outcome = RestartOutcome(
        index,
        minimum.fiducial,
        residual,
        frame_potential_gap(minimum.fiducial.vector),
        minimum.iterations,
        residual <= config.target_residual and structure.certified,
    )
    logger.debug(
        "restart %d: residual %.3e after %d iterations",
        index,
        residual,
        minimum.iterations,
    )
    return outcome


def _pool(jobs: int) -> typing.ContextManager:
    if jobs == 1:
        return contextlib.nullcontext(None)
    return multiprocessing.Pool(jobs)


def search(config: SearchConfig, jobs: int = 1) -> SearchResult:
    """Searches for a SIC fiducial in `config.dim` dimensions.

    Parameters:
        config: The search parameters.
        jobs: Number of worker processes running restarts. The result is
            the same for every value.

    Returns:
        A SearchResult. A FOUND result has been re-verified with
        `verify_sic` at `config.target_residual`.

    Raises:
        InvalidSearchConfig for bad parameters, or `jobs` < 1.
    """
    config.validate()
    if jobs < 1:
        raise InvalidSearchConfig(f"jobs must be at least 1, got {jobs}")
    run = functools.partial(run_restart, config)
    indices = range(config.max_restarts)
    best: typing.Optional[RestartOutcome] = None
    winner: typing.Optional[RestartOutcome] = None
    iterations = 0
    with _pool(jobs) as pool:
        # imap yields in index order whatever the schedule
        outcomes = (
            map(run, indices) if pool is None else pool.imap(run, indices)
        )
        for outcome in outcomes:
            iterations += outcome.iterations
            if best is None or outcome.residual < best.residual:
                best = outcome
            if outcome.found:
                winner = outcome
                break
    assert best is not None
    chosen = winner or best
    status = SearchStatus.FOUND if winner else SearchStatus.NOT_FOUND
    restarts = chosen.index + 1 if winner else config.max_restarts
    logger.info(
        "SIC search in d=%d: %s, residual %.3e after %d restart(s)",
        config.dim,
        status.value,
        chosen.residual,
        restarts,
    )
    return SearchResult(
        dim=config.dim,
        status=status,
        fiducial=winner.fiducial if winner else None,
        residual=chosen.residual,
        frame_potential_gap=chosen.gap,
        restarts_used=restarts,
        iterations_used=iterations,
        seed=config.seed,
        candidate=chosen.fiducial,
    )
