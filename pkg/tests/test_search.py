import time

import numpy as np
import pytest

from sicprob.errors import (
    DimensionMismatch,
    InvalidDimension,
    InvalidSearchConfig,
)
from sicprob.search import (
    SearchConfig,
    SearchStatus,
    local_minimize,
    random_start,
    run_restart,
    search,
)
from sicprob.sic import (
    builtin_fiducial,
    frame_potential,
    minimum_frame_potential,
    orbit,
    overlap_residual,
    verify_sic,
)


@pytest.mark.parametrize(
    "changes",
    [
        {"max_restarts": 0},
        {"max_iterations": 0},
        {"target_residual": 0.0},
        {"shrink_factor": 1.0},
        {"min_step": 0.0},
        {"min_step": 1.0, "initial_step": 0.1},
        {"seed": -1},
        {"polish_residual": 0.0},
        {"polish_iterations": -1},
    ],
)
def test_config_rejects(changes):
    with pytest.raises(InvalidSearchConfig):
        SearchConfig(dim=2, **changes).validate()


def test_config_rejects_dimension():
    with pytest.raises(InvalidDimension):
        search(SearchConfig(dim=1))


def test_search_rejects_jobs():
    with pytest.raises(InvalidSearchConfig):
        search(SearchConfig(dim=2), jobs=0)


def test_local_minimize_at_optimum():
    start = builtin_fiducial(3)
    minimum = local_minimize(start, SearchConfig(dim=3))
    assert minimum.frame_potential == pytest.approx(
        frame_potential(start), abs=1e-12
    )
    assert minimum.iterations == 0


@pytest.mark.parametrize("dim,seed", [(2, 1), (3, 2), (4, 3)])
def test_local_minimize_monotone(dim, seed):
    start = random_start(dim, seed)
    gaps = []
    config = SearchConfig(dim=dim, max_iterations=200)
    minimum = local_minimize(start, config, callback=gaps.append)
    assert minimum.frame_potential <= frame_potential(start) + 1e-14
    assert all(later <= earlier for earlier, later in zip(gaps, gaps[1:]))
    assert minimum.iterations <= 200


def test_local_minimize_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        local_minimize(random_start(2, 0), SearchConfig(dim=3))


def test_run_restart_deterministic():
    config = SearchConfig(dim=3, max_iterations=50)
    a = run_restart(config, 4)
    b = run_restart(config, 4)
    assert np.array_equal(a.fiducial.vector, b.fiducial.vector)
    assert a.iterations == b.iterations


def test_search_d2():
    start = time.perf_counter()
    result = search(SearchConfig(dim=2, seed=0))
    assert time.perf_counter() - start < 1
    assert result.status is SearchStatus.FOUND
    assert result.found
    assert result.residual <= 1e-12
    verification = verify_sic(orbit(result.fiducial).projectors, 2)
    assert verification.residual <= 1e-12
    assert verification.povm_deviation <= 1e-10
    assert result.frame_potential_gap == pytest.approx(0, abs=1e-12)
    assert 1 <= result.restarts_used <= 64


def test_search_starved():
    config = SearchConfig(dim=3, seed=0, max_restarts=1, max_iterations=1)
    result = search(config)
    assert result.status is SearchStatus.NOT_FOUND
    assert result.fiducial is None
    assert result.iterations_used == 1
    assert result.restarts_used == 1
    assert result.candidate.dim == 3


@pytest.mark.slow
@pytest.mark.parametrize("dim", [3, 4, 5, 6])
def test_search_finds(dim):
    result = search(SearchConfig(dim=dim, seed=0), jobs=2)
    assert result.found
    sic = orbit(result.fiducial)
    assert sic.certified
    assert sic.residual <= 1e-12
    assert sic.verification.povm_deviation <= 1e-10
    assert frame_potential(result.fiducial) == pytest.approx(
        minimum_frame_potential(dim), abs=1e-7
    )


@pytest.mark.slow
def test_search_independent_of_jobs():
    config = SearchConfig(dim=4, seed=3)
    serial = search(config, jobs=1)
    parallel = search(config, jobs=3)
    assert serial.restarts_used == parallel.restarts_used
    assert serial.iterations_used == parallel.iterations_used
    assert np.array_equal(
        serial.candidate.vector, parallel.candidate.vector
    )


@pytest.mark.parametrize("dim,seed", [(2, 0), (3, 0), (4, 0)])
def test_local_minimize_polishes(dim, seed):
    start = random_start(dim, seed)
    config = SearchConfig(dim=dim, seed=seed)
    rough = local_minimize(start, config._replace(polish_iterations=0))
    polished = local_minimize(start, config)
    assert polished.iterations == rough.iterations
    if overlap_residual(rough.fiducial.vector) <= config.target_residual:
        assert overlap_residual(polished.fiducial.vector) <= 1e-12
        assert orbit(polished.fiducial).certified


def test_restart_found_needs_certified_orbit():
    # every vector meets this target, but a random orbit is no SIC
    config = SearchConfig(
        dim=3, max_restarts=2, target_residual=1.0, polish_iterations=0
    )
    outcome = run_restart(config, 0)
    assert outcome.residual <= 1.0
    assert not outcome.found
    assert search(config).status is SearchStatus.NOT_FOUND


@pytest.mark.slow
def test_search_d6_time():
    start = time.perf_counter()
    result = search(SearchConfig(dim=6, seed=0))
    assert time.perf_counter() - start < 60
    assert result.found
    assert result.residual <= 1e-12
