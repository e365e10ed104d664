import typing

import numpy as np
import pytest

from sicprob.errors import (
    DimensionMismatch,
    NotAProbabilityVector,
    NotAQuantumState,
    NotFinite,
    NotInformationallyComplete,
    ShapeMismatch,
    WrongCount,
)
from sicprob.quantum import (
    Povm,
    basis_povm,
    born_direct,
    random_density,
    random_povm,
    random_pure_density,
    random_unitary,
    validate_density,
)
from sicprob.search import (
    SearchConfig,
    local_minimize,
    random_start,
    search,
)
from sicprob.sic import Fiducial, builtin_fiducial, orbit
from sicprob.urgleichung import (
    born_urgleichung,
    born_urgleichung_mic,
    classical_ltp,
    cond_prob_matrix,
    evolve_probs_mic,
    ltp_deviation,
    mic_born_matrix,
    mic_duals,
    orbit_mic,
    perturbed_mic,
    probs_to_state,
    probs_to_state_mic,
    purity_from_probs,
    state_to_probs,
    state_to_probs_mic,
    uniform_probs,
    validate_probs,
)


@pytest.fixture(scope="module")
def sic2():
    return orbit(builtin_fiducial(2))


@pytest.fixture(scope="module")
def sic3():
    return orbit(builtin_fiducial(3))


@pytest.fixture(scope="module")
def sics(sic2, sic3):
    """Certified SICs for d = 2..6, the larger ones found by search."""

    found = {2: sic2, 3: sic3}
    for dim in (4, 5, 6):
        result = search(SearchConfig(dim=dim, seed=0))
        assert result.found
        found[dim] = orbit(result.fiducial)
    return found


def self_measurement(sic) -> Povm:
    return Povm(sic.effects)


def test_validate_probs_rejects():
    with pytest.raises(ShapeMismatch):
        validate_probs([0.5, 0.5], 2)
    with pytest.raises(NotAProbabilityVector):
        validate_probs([0.5, 0.5, 0.5, -0.5], 2)
    with pytest.raises(NotAProbabilityVector) as info:
        validate_probs([0.25, 0.25, 0.25, 0.3], 2)
    assert info.value.deviation == pytest.approx(0.05)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_validate_probs_rejects_non_finite(bad):
    with pytest.raises(NotFinite):
        validate_probs([bad, 0.25, 0.25, 0.25], 2)


def test_maximally_mixed(sic3):
    p = state_to_probs(validate_density(np.eye(3) / 3), sic3)
    assert np.allclose(p.entries, 1 / 9, atol=1e-15)
    rho = probs_to_state(uniform_probs(3), sic3)
    assert np.allclose(rho.matrix, np.eye(3) / 3, atol=1e-12)


@pytest.mark.parametrize("k", range(4))
def test_sic_projector_state(sic2, k):
    p = state_to_probs(validate_density(sic2.projectors[k]), sic2)
    expected = np.full(4, 1 / 6)
    expected[k] = 1 / 2
    assert np.allclose(p.entries, expected, atol=1e-12)


def test_probability_bounds(sic2):
    dim = 2
    for seed in range(20):
        p = state_to_probs(random_density(dim, seed), sic2)
        total = np.sum(p.entries ** 2)
        assert 1 / dim ** 2 - 1e-10 <= total <= 2 / (dim * (dim + 1)) + 1e-10


@pytest.mark.slow
def test_random_state_d4(sics):
    p = state_to_probs(random_density(4, seed=1), sics[4])
    assert 1 / 16 <= np.sum(p.entries ** 2) <= 1 / 10


@pytest.mark.slow
@pytest.mark.parametrize("dim", [2, 3, 4, 5, 6])
def test_round_trip(sics, dim):
    sic = sics[dim]
    for seed in range(100):
        rho = random_density(dim, seed)
        p = state_to_probs(rho, sic)
        back = probs_to_state(p, sic)
        assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-11
        assert purity_from_probs(p) == pytest.approx(rho.purity, abs=1e-9)


def test_vertex_is_not_a_state(sic2):
    p = validate_probs([1, 0, 0, 0], 2)
    with pytest.raises(NotAQuantumState) as info:
        probs_to_state(p, sic2)
    assert info.value.min_eigenvalue < 0
    assert info.value.deviation == -info.value.min_eigenvalue


def test_cond_prob_matrix_trivial(sic3):
    r = cond_prob_matrix(Povm(np.eye(3)[None].astype(complex)), sic3)
    assert r.rows == 1
    assert r.cols == 9
    assert np.allclose(r.entries, 1, atol=1e-12)


def test_cond_prob_matrix_self(sic2):
    r = cond_prob_matrix(self_measurement(sic2), sic2)
    expected = (2 * np.eye(4) + 1) / 3 / 2
    assert np.allclose(r.entries, expected, atol=1e-12)


def test_cond_prob_matrix_columns(sic3):
    r = cond_prob_matrix(random_povm(3, 5, seed=2), sic3)
    assert r.column_sum_deviation <= 1e-12
    assert np.all(r.entries >= 0)


def test_born_urgleichung_self(sic2):
    r = cond_prob_matrix(self_measurement(sic2), sic2)
    uniform = born_urgleichung(uniform_probs(2), r, 2)
    assert np.allclose(uniform.entries, 1 / 4, atol=1e-12)
    p = state_to_probs(validate_density(sic2.projectors[1]), sic2)
    outcome = born_urgleichung(p, r, 2)
    expected = np.full(4, 1 / 6)
    expected[1] = 1 / 2
    assert np.allclose(outcome.entries, expected, atol=1e-12)


class BornCase(typing.NamedTuple):
    dim: int
    kind: str


born_cases = [
    BornCase(dim, kind)
    for dim in (2, 3, 4, 5)
    for kind in ("projective", "self", "random")
]


@pytest.mark.slow
@pytest.mark.parametrize("case", born_cases)
def test_born_equivalence(sics, case: BornCase):
    sic = sics[case.dim]
    worst = 0.0
    for seed in range(100):
        rho = random_density(case.dim, seed)
        if case.kind == "projective":
            povm = basis_povm(case.dim)
        elif case.kind == "self":
            povm = self_measurement(sic)
        else:
            povm = random_povm(case.dim, 2 + seed % 7, seed)
        r = cond_prob_matrix(povm, sic)
        assert r.column_sum_deviation <= 1e-10
        urgleichung = born_urgleichung(state_to_probs(rho, sic), r, case.dim)
        direct = born_direct(rho, povm)
        worst = max(worst, np.max(np.abs(urgleichung.raw - direct.raw)))
    assert worst <= 1e-10


def test_born_urgleichung_shapes(sic2, sic3):
    r = cond_prob_matrix(basis_povm(3), sic3)
    with pytest.raises(ShapeMismatch):
        born_urgleichung(uniform_probs(2), r, 2)
    with pytest.raises(ShapeMismatch):
        born_urgleichung(uniform_probs(3), r, 2)
    with pytest.raises(DimensionMismatch):
        cond_prob_matrix(basis_povm(3), sic2)


def test_ltp_separation(sic2):
    r = cond_prob_matrix(self_measurement(sic2), sic2)
    assert ltp_deviation(uniform_probs(2), r, 2) <= 1e-12
    p = state_to_probs(validate_density(sic2.projectors[0]), sic2)
    classical = classical_ltp(p, r)
    assert classical.entries[0] == pytest.approx(1 / 3)
    assert classical.entries.sum() == pytest.approx(1, abs=1e-12)
    assert ltp_deviation(p, r, 2) == pytest.approx(1 / 6, abs=1e-12)


def test_ltp_separation_random_pure(sic3):
    r = cond_prob_matrix(self_measurement(sic3), sic3)
    for seed in range(50):
        p = state_to_probs(random_pure_density(3, seed), sic3)
        assert ltp_deviation(p, r, 3) > 1e-3


def test_mic_duals_of_sic(sic2):
    mic = mic_duals(sic2.effects, 2)
    expected = 2 * 3 * np.array(sic2.effects) - np.eye(2)
    assert np.allclose(mic.duals, expected, atol=1e-10)
    p = state_to_probs(random_density(2, seed=3), sic2)
    assert np.allclose(
        probs_to_state_mic(p, mic).matrix,
        probs_to_state(p, sic2).matrix,
        atol=1e-12,
    )
    with pytest.raises(NotAQuantumState):
        probs_to_state_mic(validate_probs([1, 0, 0, 0], 2), mic)


def test_mic_duals_rejects():
    half = np.diag([0.5, 0])
    quarter = np.diag([0, 0.5])
    with pytest.raises(NotInformationallyComplete) as info:
        mic_duals([half, half, quarter, quarter], 2)
    assert abs(info.value.determinant) <= 1e-12
    with pytest.raises(WrongCount):
        mic_duals([np.diag([1, 0]), np.diag([0, 1])], 2)
    with pytest.raises(DimensionMismatch):
        mic_duals(basis_povm(3).effects, 2)


def test_state_to_probs_mic_maximally_mixed(sic2):
    mic = perturbed_mic(sic2, weight=0.3, seed=5)
    p = state_to_probs_mic(validate_density(np.eye(2) / 2), mic)
    traces = np.trace(mic.effects, axis1=1, axis2=2).real
    assert np.allclose(p.entries, traces / 2, atol=1e-12)
    rho = random_density(2, seed=9)
    same = state_to_probs_mic(rho, mic_duals(sic2.effects, 2))
    assert np.allclose(
        same.entries,
        state_to_probs(rho, sic2).entries,
        atol=1e-12,
    )


class MicCase(typing.NamedTuple):
    dim: int
    seed: typing.Optional[int]


mic_cases = [MicCase(dim, seed) for dim in (2, 3) for seed in (None, 1)]


@pytest.mark.parametrize("case", mic_cases)
def test_perturbed_mic(sic2, sic3, case: MicCase):
    sic = {2: sic2, 3: sic3}[case.dim]
    mic = perturbed_mic(sic, weight=0.1, seed=case.seed)
    assert mic.gram_determinant > 1e-12
    duality = np.einsum("kab,iba->ki", mic.duals, mic.effects).real
    assert np.allclose(duality, np.eye(case.dim ** 2), atol=1e-9)
    for seed in range(50):
        rho = random_density(case.dim, seed)
        p = state_to_probs_mic(rho, mic)
        back = probs_to_state_mic(p, mic)
        assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-10
        povm = random_povm(case.dim, 4, seed)
        outcome = born_urgleichung_mic(p, povm, mic)
        direct = born_direct(rho, povm)
        assert np.allclose(outcome.raw, direct.raw, atol=1e-9)


def test_perturbed_mic_weight(sic2):
    with pytest.raises(ValueError):
        perturbed_mic(sic2, weight=1.0)


def test_mic_born_matrix_shape(sic3):
    mic = perturbed_mic(sic3)
    assert mic_born_matrix(basis_povm(3), mic).shape == (3, 9)


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_orbit_mic(dim):
    # a rough frame-potential minimum keeps every overlap away from zero
    config = SearchConfig(dim=dim, seed=dim, target_residual=0.02)
    fiducial = local_minimize(random_start(dim, seed=dim), config).fiducial
    mic = orbit_mic(fiducial)
    assert mic.gram_determinant > 1e-12
    for seed in range(10):
        rho = random_density(dim, seed=seed)
        p = state_to_probs_mic(rho, mic)
        back = probs_to_state_mic(p, mic)
        assert np.allclose(back.matrix, rho.matrix, atol=1e-9)


def test_orbit_mic_basis_vector():
    # ⟨0|X^a Z^b|0⟩ vanishes for a ≠ 0
    with pytest.raises(NotInformationallyComplete):
        orbit_mic(Fiducial.from_vector([1, 0, 0]))


@pytest.mark.parametrize("dim", [2, 3])
def test_evolve_probs_mic(sic2, sic3, dim):
    mic = perturbed_mic({2: sic2, 3: sic3}[dim], seed=dim)
    rho = random_density(dim, seed=6)
    u = random_unitary(dim, seed=7)
    evolved = evolve_probs_mic(state_to_probs_mic(rho, mic), u, mic)
    rotated = validate_density(u.matrix @ rho.matrix @ u.matrix.conj().T)
    expected = state_to_probs_mic(rotated, mic)
    assert np.allclose(evolved.entries, expected.entries, atol=1e-12)
