import json
import pathlib
import typing

import numpy as np
import pytest

from sicprob import codec
from sicprob.__version__ import __version__
from sicprob.cli import ExitStatus, main
from sicprob.quantum import random_density
from sicprob.search import SearchConfig, search
from sicprob.sic import orbit
from sicprob.urgleichung import perturbed_mic

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
CIRCUIT = FIXTURES / "circuit-d4.json"
CIRCUIT_OUTCOME = [0.125, 0.25, 0.125, 0.0, 0.25, 0.25]
FIDUCIAL_D2 = FIXTURES / "fiducial-d2.json"
FIDUCIAL_D3 = FIXTURES / "fiducial-d3.json"
BASIS_D2 = FIXTURES / "fiducial-basis-d2.json"
MIXED_D3 = FIXTURES / "state-mixed-d3.json"
VERTEX_D2 = FIXTURES / "probs-vertex-d2.json"


def fixture_json(name: str) -> typing.Any:
    return json.loads((FIXTURES / name).read_text())


def run(command: str) -> int:
    """Runs the CLI on a whitespace-separated command line."""
    return main(command.split())


def read_report(filepath: pathlib.Path) -> codec.Document:
    envelope = json.loads(filepath.read_text())
    assert set(envelope) == {"manifest", "result"}
    assert envelope["manifest"]["version"] == __version__
    return envelope["result"]


@pytest.fixture(scope="module")
def d4_files(tmp_path_factory):
    """A searched d=4 fiducial and a MIC near its SIC, saved as files."""
    directory = tmp_path_factory.mktemp("d4")
    result = search(SearchConfig(dim=4, seed=0))
    assert result.found
    files = {
        "fiducial": directory / "fiducial-d4.json",
        "mic": directory / "mic-d4.json",
    }
    codec.save(result.fiducial, files["fiducial"])
    codec.save(perturbed_mic(orbit(result.fiducial)), files["mic"])
    return files


def test_version(capsys):
    assert run("--version") == ExitStatus.OK
    assert capsys.readouterr().out.strip() == f"sicprob {__version__}"


def test_usage_error():
    assert run("sic") == ExitStatus.INVALID_INPUT
    assert run("convert --to probs") == ExitStatus.INVALID_INPUT


def test_sic_find(tmp_path: pathlib.Path):
    out = tmp_path / "search.json"
    status = run(f"sic find --dim 2 --seed 0 --jobs 1 --out {out}")
    assert status == ExitStatus.OK
    result = read_report(out)
    assert result["status"] == "found"
    assert result["residual"] <= 1e-9
    assert result["seed"] == 0


def test_sic_find_rejects_config():
    assert run("sic find --dim 2 --restarts 0") == ExitStatus.INVALID_INPUT
    assert run("sic find --dim 1 --jobs 1") == ExitStatus.INVALID_INPUT


def test_sic_find_not_found(tmp_path: pathlib.Path, capsys):
    out = tmp_path / "search.json"
    status = run(
        f"sic find --dim 3 --restarts 1 --iterations 1 --jobs 1 --out {out}"
    )
    assert status == ExitStatus.NOT_FOUND
    assert read_report(out)["status"] == "not_found"
    assert capsys.readouterr().out == ""


@pytest.mark.slow
def test_sic_find_deterministic(tmp_path: pathlib.Path):
    payloads = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert run(f"sic find --dim 4 --seed 0 --out {out}") == 0
        payloads.append(codec.dumps(read_report(out)))
    assert payloads[0] == payloads[1]


def test_sic_verify(tmp_path: pathlib.Path):
    out = tmp_path / "verification.json"
    status = run(f"sic verify --in {FIDUCIAL_D3} --out {out}")
    assert status == ExitStatus.OK
    assert read_report(out)["residual"] <= 1e-12


def test_sic_verify_fails(tmp_path: pathlib.Path):
    out = tmp_path / "verification.json"
    status = run(f"sic verify --in {BASIS_D2} --tol 1e-8 --out {out}")
    assert status == ExitStatus.VERIFY_FAILED
    assert read_report(out)["residual"] == pytest.approx(2 / 3)


def test_sic_verify_invalid(tmp_path: pathlib.Path):
    truncated = tmp_path / "truncated.json"
    text = FIDUCIAL_D3.read_text()
    truncated.write_text(text[: len(text) // 2])
    missing = tmp_path / "missing.json"
    for path in (truncated, missing, MIXED_D3):
        assert run(f"sic verify --in {path}") == ExitStatus.INVALID_INPUT


def test_sic_builtin(tmp_path: pathlib.Path):
    out = tmp_path / "fiducial.json"
    assert run(f"sic builtin --dim 2 --out {out}") == ExitStatus.OK
    assert read_report(out)["kind"] == "fiducial"
    assert run("sic builtin --dim 5") == ExitStatus.INVALID_INPUT


def test_convert_to_probs(tmp_path: pathlib.Path):
    out = tmp_path / "probs.json"
    status = run(
        f"convert --to probs --in {MIXED_D3} --sic {FIDUCIAL_D3} --out {out}"
    )
    assert status == ExitStatus.OK
    result = read_report(out)
    assert result["kind"] == "probs"
    assert np.allclose(result["entries"], 1 / 9, atol=1e-15)


def test_convert_round_trip(tmp_path: pathlib.Path):
    rho = random_density(2, seed=3)
    state = tmp_path / "state.json"
    probs = tmp_path / "probs.json"
    back = tmp_path / "back.json"
    codec.save(rho, state)
    sic = f"--sic {FIDUCIAL_D2}"
    assert run(f"convert --to probs --in {state} {sic} --out {probs}") == 0
    # unwrap the report so the result can be read back as an input
    codec.save(codec.from_json(read_report(probs)), probs)
    assert run(f"convert --to state --in {probs} {sic} --out {back}") == 0
    rebuilt = codec.from_json(read_report(back))
    assert np.max(np.abs(rebuilt.matrix - rho.matrix)) <= 1e-11


def test_convert_not_a_state(tmp_path: pathlib.Path, capsys):
    out = tmp_path / "state.json"
    status = run(
        f"convert --to state --in {VERTEX_D2} --sic {FIDUCIAL_D2} --out {out}"
    )
    assert status == ExitStatus.VERIFY_FAILED
    result = read_report(out)
    assert result["kind"] == "error"
    assert result["error"] == "NotAQuantumState"
    assert result["min_eigenvalue"] < 0
    assert "not a quantum state" in capsys.readouterr().out


@pytest.mark.parametrize(
    "representation",
    [
        f"--sic {FIDUCIAL_D2}",  # dimension mismatch
        f"--sic {BASIS_D2}",  # not a SIC
        f"--sic {FIDUCIAL_D3} --mic {FIDUCIAL_D3}",
        "",
    ],
)
def test_convert_rejects(representation):
    command = f"convert --to probs --in {MIXED_D3} {representation}"
    assert run(command) == ExitStatus.INVALID_INPUT


class BornCase(typing.NamedTuple):
    name: str
    state: codec.Document
    povm: codec.Document
    expected: typing.List[float]


born_cases = [
    BornCase(**case) for case in fixture_json("born-cases.json")["cases"]
]


@pytest.mark.parametrize(
    "case", born_cases, ids=[case.name for case in born_cases]
)
def test_born_both(tmp_path: pathlib.Path, case: BornCase):
    state = tmp_path / "state.json"
    povm = tmp_path / "povm.json"
    out = tmp_path / "born.json"
    state.write_text(json.dumps(case.state))
    povm.write_text(json.dumps(case.povm))
    sic = FIXTURES / f"fiducial-d{case.state['dim']}.json"
    status = run(
        f"born --state {state} --povm {povm} --sic {sic} --out {out}"
    )
    assert status == ExitStatus.OK
    result = read_report(out)
    assert result["kind"] == "born_report"
    assert float(result["max_abs_deviation"]) <= 1e-10
    for rule in ("direct", "urgleichung"):
        entries = result[rule]["entries"]
        assert np.allclose(entries, case.expected, rtol=0, atol=1e-10)


def test_born_ltp(tmp_path: pathlib.Path, capsys):
    state = FIXTURES / "state-sic-projector-d2.json"
    out = tmp_path / "born.json"
    status = run(
        f"born --state {state} --povm sic --sic {FIDUCIAL_D2} "
        f"--method ltp --out {out}"
    )
    assert status == ExitStatus.OK
    result = read_report(out)
    assert float(result["ltp_deviation"]) == pytest.approx(1 / 6, abs=1e-12)
    assert "ltp_deviation: 0.166666666667" in capsys.readouterr().out


def test_born_from_probs(tmp_path: pathlib.Path):
    out = tmp_path / "born.json"
    status = run(
        f"born --probs {VERTEX_D2} --povm sic --sic {FIDUCIAL_D2} "
        f"--method urgleichung --out {out}"
    )
    assert status == ExitStatus.OK
    assert sum(read_report(out)["urgleichung"]["raw"]) == pytest.approx(1)


@pytest.mark.parametrize(
    "arguments",
    [
        f"--state {MIXED_D3} --povm sic --method urgleichung",
        f"--povm sic --sic {FIDUCIAL_D3}",
        f"--state {MIXED_D3} --povm {FIDUCIAL_D3} --method direct",
        f"--state {MIXED_D3} --povm sic --mic {FIDUCIAL_D3} --method ltp",
    ],
)
def test_born_rejects(arguments):
    assert run(f"born {arguments}") == ExitStatus.INVALID_INPUT


def test_simulate_mic(tmp_path: pathlib.Path, d4_files):
    out = tmp_path / "report.json"
    status = run(
        f"simulate --circuit {CIRCUIT} --mic {d4_files['mic']} --report {out}"
    )
    assert status == ExitStatus.OK
    result = read_report(out)
    assert result["kind"] == "track_report"
    assert result["representation"] == "mic"
    assert float(result["max_abs_deviation"]) <= 1e-9
    assert len(result["per_step_deviations"]) == 3
    amplitude = result["amplitude_outcome"]["entries"]
    assert np.allclose(amplitude, CIRCUIT_OUTCOME, atol=1e-12)


def test_simulate_sic(tmp_path: pathlib.Path, d4_files):
    out = tmp_path / "report.json"
    fiducial = d4_files["fiducial"]
    status = run(
        f"simulate --circuit {CIRCUIT} --sic {fiducial} --report {out}"
    )
    assert status == ExitStatus.OK
    result = read_report(out)
    assert result["representation"] == "sic"
    probability = result["probability_outcome"]["entries"]
    assert np.allclose(probability, CIRCUIT_OUTCOME, atol=1e-9)


def test_simulate_single_tracks(tmp_path: pathlib.Path, d4_files):
    outcomes = {}
    for track in ("amplitude", "probability"):
        out = tmp_path / f"{track}.json"
        status = run(
            f"simulate --circuit {CIRCUIT} --sic {d4_files['fiducial']} "
            f"--track {track} --report {out}"
        )
        assert status == ExitStatus.OK
        result = read_report(out)
        assert result["kind"] == "distribution"
        outcomes[track] = np.array(result["raw"])
    assert np.allclose(
        outcomes["amplitude"], outcomes["probability"], atol=1e-9
    )


def test_simulate_deterministic(tmp_path: pathlib.Path, d4_files):
    payloads = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        command = (
            f"simulate --circuit {CIRCUIT} --mic {d4_files['mic']} "
            f"--report {out}"
        )
        assert run(command) == ExitStatus.OK
        payloads.append(codec.dumps(read_report(out)))
    assert payloads[0] == payloads[1]


@pytest.mark.slow
def test_simulate_default_representation(tmp_path: pathlib.Path):
    out = tmp_path / "report.json"
    status = run(f"simulate --circuit {CIRCUIT} --jobs 1 --report {out}")
    assert status == ExitStatus.OK
    assert read_report(out)["representation"] == "sic"


def test_simulate_corrupted_unitary(tmp_path: pathlib.Path):
    document = json.loads(CIRCUIT.read_text())
    document["steps"][2]["unitary"]["entries"][0] = [2.0, 0.0]
    corrupted = tmp_path / "circuit.json"
    corrupted.write_text(json.dumps(document))
    out = tmp_path / "report.json"
    status = run(f"simulate --circuit {corrupted} --report {out}")
    assert status == ExitStatus.INVALID_INPUT
    assert list(tmp_path.iterdir()) == [corrupted]


def test_simulate_builtin_dimension(tmp_path: pathlib.Path):
    pauli_x = {
        "rows": 2,
        "cols": 2,
        "entries": [[0, 0], [1, 0], [1, 0], [0, 0]],
    }
    document = {
        "kind": "circuit",
        "dim": 2,
        "initial": codec.to_json(random_density(2, seed=0)),
        "steps": [{"label": "x", "unitary": pauli_x}],
        "final_measurement": "sic",
    }
    circuit = tmp_path / "circuit.json"
    circuit.write_text(json.dumps(document))
    out = tmp_path / "report.json"
    assert run(f"simulate --circuit {circuit} --report {out}") == 0
    result = read_report(out)
    assert len(result["amplitude_outcome"]["entries"]) == 4
    manifest = json.loads(out.read_text())["manifest"]
    assert str(circuit) in manifest["input_digests"]
    assert manifest["command_line"][0] == "simulate"


circuit_outcomes = fixture_json("circuit-outcomes.json")


@pytest.mark.parametrize("name", sorted(circuit_outcomes))
def test_simulate_regression_circuits(tmp_path: pathlib.Path, d4_files, name):
    out = tmp_path / "report.json"
    circuit = FIXTURES / name
    # d=2 and d=3 fall back to the built-in SICs
    representation = f"--mic {d4_files['mic']}" if "d4" in name else ""
    status = run(
        f"simulate --circuit {circuit} {representation} --report {out}"
    )
    assert status == ExitStatus.OK
    result = read_report(out)
    assert float(result["max_abs_deviation"]) <= 1e-9
    expected = circuit_outcomes[name]
    for track in ("amplitude_outcome", "probability_outcome"):
        entries = result[track]["entries"]
        assert np.allclose(entries, expected, rtol=0, atol=1e-9)


@pytest.mark.parametrize("bad", ["NaN", "Infinity", "-Infinity"])
def test_convert_rejects_non_finite(tmp_path: pathlib.Path, bad):
    probs = tmp_path / "probs.json"
    probs.write_text(
        '{"kind": "probs", "dim": 2, '
        f'"entries": [{bad}, 0.25, 0.25, 0.25]}}'
    )
    status = run(f"convert --to state --in {probs} --sic {FIDUCIAL_D2}")
    assert status == ExitStatus.INVALID_INPUT


def test_sic_verify_not_utf8(tmp_path: pathlib.Path):
    binary = tmp_path / "binary.json"
    binary.write_bytes(b"\xff\xfe" + FIDUCIAL_D2.read_bytes())
    assert run(f"sic verify --in {binary}") == ExitStatus.INVALID_INPUT


def test_born_rejects_before_printing(capsys):
    status = run(
        f"born --state {MIXED_D3} --povm sic --mic {FIDUCIAL_D3} "
        "--method ltp"
    )
    assert status == ExitStatus.INVALID_INPUT
    assert capsys.readouterr().out == ""
