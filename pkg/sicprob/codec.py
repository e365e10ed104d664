"""JSON wire formats of every sicprob object.

Every document is a JSON object with a "kind" field naming its type.
Complex numbers are `[re, im]` pairs and matrices are
`{"rows": n, "cols": m, "entries": [...]}` with the entries in row-major
order. `to_json` turns an object into such a document, `from_json` checks a
document against its schema and builds the object, validating it on the way.

Example:
    from sicprob import codec, sic
    document = codec.to_json(sic.builtin_fiducial(3))
    codec.save(document, "fiducial-d3.json")
    fiducial = codec.load("fiducial-d3.json", expect={"fiducial"})
"""
import functools
import json
import typing

import numpy as np  # type: ignore

from . import pathutils
from .dualtrack import (
    SIC_READOUT,
    Circuit,
    CircuitStep,
    TrackReport,
    TransferMap,
)
from .errors import NotAQuantumState, SchemaError, SicProbError
from .quantum import (
    DensityMatrix,
    OutcomeDistribution,
    Povm,
    Unitary,
    _frozen,
    check_dim,
    validate_density,
    validate_povm,
    validate_unitary,
)
from .search import SearchResult, SearchStatus
from .sic import (
    Fiducial,
    SicReport,
    SicStructure,
    SicVerification,
    sic_from_projectors,
)
from .urgleichung import (
    CondProbMatrix,
    MicStructure,
    ProbVector,
    mic_duals,
    validate_probs,
)

Document = typing.Dict[str, typing.Any]


def format_deviation(value: float) -> str:
    """17 significant digits in scientific notation, lossless for a float."""
    return format(float(value), ".16e")


def _complex_list(values: np.ndarray) -> typing.List[typing.List[float]]:
    return [[float(z.real), float(z.imag)] for z in np.ravel(values)]


def _matrix(matrix: np.ndarray) -> Document:
    matrix = np.asarray(matrix)
    rows, cols = matrix.shape
    if np.iscomplexobj(matrix):
        entries: typing.List[typing.Any] = _complex_list(matrix)
    else:
        entries = [float(x) for x in np.ravel(matrix)]
    return {"rows": rows, "cols": cols, "entries": entries}


@functools.singledispatch
def to_json(obj: typing.Any) -> Document:
    """Converts a sicprob object into its JSON document.

    Raises:
        TypeError for objects without a wire format.
    """
    raise TypeError(f"No JSON format for {type(obj).__name__}")


@to_json.register(DensityMatrix)
def _density_json(rho: DensityMatrix) -> Document:
    return {"kind": "density", "dim": rho.dim, "matrix": _matrix(rho.matrix)}


@to_json.register(Unitary)
def _unitary_json(u: Unitary) -> Document:
    return {"kind": "unitary", "dim": u.dim, "matrix": _matrix(u.matrix)}


@to_json.register(Povm)
def _povm_json(povm: Povm) -> Document:
    return {
        "kind": "povm",
        "dim": povm.dim,
        "effects": [_matrix(effect) for effect in povm.effects],
    }


@to_json.register(Fiducial)
def _fiducial_json(fiducial: Fiducial) -> Document:
    return {
        "kind": "fiducial",
        "dim": fiducial.dim,
        "vector": _complex_list(fiducial.vector),
    }


@to_json.register(SicStructure)
def _sic_json(sic: SicStructure) -> Document:
    return {
        "kind": "sic",
        "dim": sic.dim,
        "fiducial": (
            None
            if sic.fiducial is None
            else _complex_list(sic.fiducial.vector)
        ),
        "projectors": [_matrix(p) for p in sic.projectors],
        "residual": sic.residual,
        "povm_deviation": sic.verification.povm_deviation,
    }


@to_json.register(SicVerification)
def _verification_json(verification: SicVerification) -> Document:
    report = verification.report
    return {
        "kind": "verification",
        "residual": verification.residual,
        "povm_deviation": verification.povm_deviation,
        "worst_pair": list(report.worst_pair),
        "worst_overlap": report.worst_overlap,
        "expected_overlap": report.expected_overlap,
        "gram_determinant": report.gram_determinant,
    }


@to_json.register(SearchResult)
def _search_result_json(result: SearchResult) -> Document:
    return {
        "kind": "search_result",
        "dim": result.dim,
        "status": result.status.value,
        "fiducial": (
            None
            if result.fiducial is None
            else _complex_list(result.fiducial.vector)
        ),
        "residual": result.residual,
        "frame_potential_gap": result.frame_potential_gap,
        "restarts_used": result.restarts_used,
        "iterations_used": result.iterations_used,
        "seed": result.seed,
        "candidate": _complex_list(result.candidate.vector),
    }


@to_json.register(ProbVector)
def _probs_json(p: ProbVector) -> Document:
    return {
        "kind": "probs",
        "dim": p.dim,
        "entries": [float(x) for x in p.entries],
    }


@to_json.register(CondProbMatrix)
def _cond_probs_json(r: CondProbMatrix) -> Document:
    document = {"kind": "cond_probs", "dim": r.dim}
    document.update(_matrix(r.entries))
    return document


@to_json.register(MicStructure)
def _mic_json(mic: MicStructure) -> Document:
    return {
        "kind": "mic",
        "dim": mic.dim,
        "effects": [_matrix(effect) for effect in mic.effects],
        "duals": [_matrix(dual) for dual in mic.duals],
        "gram_determinant": mic.gram_determinant,
    }


@to_json.register(OutcomeDistribution)
def _distribution_json(distribution: OutcomeDistribution) -> Document:
    return {
        "kind": "distribution",
        "entries": [float(x) for x in distribution.entries],
        "raw": [float(x) for x in distribution.raw],
    }


@to_json.register(TransferMap)
def _transfer_json(transfer: TransferMap) -> Document:
    document = {"kind": "transfer", "offset": transfer.offset}
    document.update(_matrix(transfer.matrix))
    return document


@to_json.register(Circuit)
def _circuit_json(circuit: Circuit) -> Document:
    final = circuit.final_measurement
    return {
        "kind": "circuit",
        "dim": circuit.dim,
        "initial": to_json(circuit.initial),
        "steps": [
            {"unitary": _matrix(step.unitary.matrix), "label": step.label}
            for step in circuit.steps
        ],
        "final_measurement": (
            to_json(final) if isinstance(final, Povm) else final
        ),
    }


@to_json.register(TrackReport)
def _track_report_json(report: TrackReport) -> Document:
    return {
        "kind": "track_report",
        "representation": report.representation,
        "amplitude_outcome": to_json(report.amplitude_outcome),
        "probability_outcome": to_json(report.probability_outcome),
        "max_abs_deviation": format_deviation(report.max_abs_deviation),
        "per_step_deviations": [
            format_deviation(x) for x in report.per_step_deviations
        ],
    }


@to_json.register(SicProbError)
def _error_json(error: SicProbError) -> Document:
    document = {
        "kind": "error",
        "error": type(error).__name__,
        "message": str(error),
    }
    if isinstance(error, NotAQuantumState):
        document["min_eigenvalue"] = error.min_eigenvalue
    elif hasattr(error, "deviation"):
        document["deviation"] = getattr(error, "deviation")
    return document


def _field(
    document: Document, name: str, kind: str, types: typing.Any = None
) -> typing.Any:
    """Returns `document[name]`, checking its JSON type.

    Raises:
        SchemaError if the field is missing or of the wrong type.
    """
    try:
        value = document[name]
    except (KeyError, TypeError):
        raise SchemaError(f"{kind}: missing field '{name}'") from None
    if types is not None and (
        not isinstance(value, types) or isinstance(value, bool)
    ):
        raise SchemaError(
            f"{kind}: field '{name}' has the wrong type "
            f"({type(value).__name__})"
        )
    if isinstance(value, float) and not np.isfinite(value):
        raise SchemaError(f"{kind}: field '{name}' is not finite")
    return value


def _dim(document: Document, kind: str) -> int:
    return check_dim(_field(document, "dim", kind, int))


def _reals(values: typing.Any, where: str) -> np.ndarray:
    if not isinstance(values, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool)
        for x in values
    ):
        raise SchemaError(f"{where}: expected a list of numbers")
    array = np.array(values, dtype=float)
    if not np.all(np.isfinite(array)):
        # json accepts NaN and Infinity tokens
        raise SchemaError(f"{where}: numbers must be finite")
    return array


def _complexes(values: typing.Any, where: str) -> np.ndarray:
    if not isinstance(values, list):
        raise SchemaError(f"{where}: expected a list of [re, im] pairs")
    pairs = []
    for value in values:
        if not isinstance(value, list) or len(value) != 2:
            raise SchemaError(f"{where}: expected [re, im], got {value!r}")
        pairs.append(_reals(value, where))
    pairs_array = np.array(pairs, dtype=float).reshape(len(pairs), 2)
    return pairs_array[:, 0] + 1j * pairs_array[:, 1]


def _load_matrix(
    document: typing.Any, where: str, real: bool = False
) -> np.ndarray:
    if not isinstance(document, dict):
        raise SchemaError(f"{where}: expected a matrix object")
    rows = _field(document, "rows", where, int)
    cols = _field(document, "cols", where, int)
    entries = _field(document, "entries", where, list)
    if rows < 1 or cols < 1 or len(entries) != rows * cols:
        raise SchemaError(
            f"{where}: {len(entries)} entries do not fill {rows}×{cols}"
        )
    values = _reals(entries, where) if real else _complexes(entries, where)
    return values.reshape(rows, cols)


def _load_square(document: Document, name: str, kind: str, dim: int):
    matrix = _load_matrix(_field(document, name, kind), f"{kind}.{name}")
    if matrix.shape != (dim, dim):
        raise SchemaError(
            f"{kind}.{name}: expected {dim}×{dim}, got {matrix.shape}"
        )
    return matrix


def _load_matrices(document: Document, name: str, kind: str, dim: int):
    items = _field(document, name, kind, list)
    matrices = [
        _load_matrix(item, f"{kind}.{name}[{index}]")
        for index, item in enumerate(items)
    ]
    for index, matrix in enumerate(matrices):
        if matrix.shape != (dim, dim):
            raise SchemaError(
                f"{kind}.{name}[{index}]: expected {dim}×{dim}, "
                f"got {matrix.shape}"
            )
    return np.array(matrices, dtype=complex).reshape(len(matrices), dim, dim)


def _load_vector(values: typing.Any, kind: str, dim: int) -> np.ndarray:
    vector = _complexes(values, f"{kind}.vector")
    if len(vector) != dim:
        raise SchemaError(
            f"{kind}: vector has {len(vector)} components, expected {dim}"
        )
    return vector


def _load_density(document: Document) -> DensityMatrix:
    dim = _dim(document, "density")
    return validate_density(_load_square(document, "matrix", "density", dim))


def _load_unitary(document: Document) -> Unitary:
    dim = _dim(document, "unitary")
    return validate_unitary(_load_square(document, "matrix", "unitary", dim))


def _load_povm(document: Document) -> Povm:
    dim = _dim(document, "povm")
    return validate_povm(_load_matrices(document, "effects", "povm", dim))


def _load_fiducial(document: Document) -> Fiducial:
    dim = _dim(document, "fiducial")
    vector = _field(document, "vector", "fiducial")
    return Fiducial.from_vector(_load_vector(vector, "fiducial", dim))


def _load_sic(document: Document) -> SicStructure:
    """Hand-supplied projectors are verified; the stored residual is not
    trusted."""
    dim = _dim(document, "sic")
    projectors = _load_matrices(document, "projectors", "sic", dim)
    sic = sic_from_projectors(projectors, dim)
    vector = _field(document, "fiducial", "sic")
    if vector is None:
        return sic
    return sic._replace(
        fiducial=Fiducial.from_vector(_load_vector(vector, "sic", dim))
    )


def _load_verification(document: Document) -> SicVerification:
    kind = "verification"
    pair = _field(document, "worst_pair", kind, list)
    if len(pair) != 2 or not all(isinstance(k, int) for k in pair):
        raise SchemaError(f"{kind}: worst_pair must be two integers")
    report = SicReport(
        (pair[0], pair[1]),
        _field(document, "worst_overlap", kind, (int, float)),
        _field(document, "expected_overlap", kind, (int, float)),
        _field(document, "gram_determinant", kind, (int, float)),
    )
    return SicVerification(
        _field(document, "residual", kind, (int, float)),
        _field(document, "povm_deviation", kind, (int, float)),
        report,
    )


def _load_search_result(document: Document) -> SearchResult:
    kind = "search_result"
    dim = _dim(document, kind)
    try:
        status = SearchStatus(_field(document, "status", kind, str))
    except ValueError:
        raise SchemaError(f"{kind}: unknown status") from None
    vector = _field(document, "fiducial", kind)
    fiducial = (
        None
        if vector is None
        else Fiducial.from_vector(_load_vector(vector, kind, dim))
    )
    candidate = document.get("candidate")
    return SearchResult(
        dim=dim,
        status=status,
        fiducial=fiducial,
        residual=_field(document, "residual", kind, (int, float)),
        frame_potential_gap=_field(
            document, "frame_potential_gap", kind, (int, float)
        ),
        restarts_used=_field(document, "restarts_used", kind, int),
        iterations_used=_field(document, "iterations_used", kind, int),
        seed=_field(document, "seed", kind, int),
        candidate=(
            Fiducial.from_vector(_load_vector(candidate, kind, dim))
            if candidate is not None
            else fiducial
        ),
    )


def _load_probs(document: Document) -> ProbVector:
    dim = _dim(document, "probs")
    entries = _reals(_field(document, "entries", "probs"), "probs.entries")
    if len(entries) != dim * dim:
        raise SchemaError(
            f"probs: {len(entries)} entries, expected {dim * dim}"
        )
    return validate_probs(entries, dim)


def _load_cond_probs(document: Document) -> CondProbMatrix:
    dim = _dim(document, "cond_probs")
    entries = _load_matrix(document, "cond_probs", real=True)
    if entries.shape[1] != dim * dim:
        raise SchemaError(
            f"cond_probs: {entries.shape[1]} columns, expected {dim * dim}"
        )
    return CondProbMatrix(dim, _frozen(entries, dtype=float))


def _load_mic(document: Document) -> MicStructure:
    """The duals are recomputed from the effects."""
    dim = _dim(document, "mic")
    return mic_duals(_load_matrices(document, "effects", "mic", dim), dim)


def _load_distribution(document: Document) -> OutcomeDistribution:
    kind = "distribution"
    entries = _reals(_field(document, "entries", kind), f"{kind}.entries")
    raw = _reals(_field(document, "raw", kind), f"{kind}.raw")
    if entries.shape != raw.shape:
        raise SchemaError(f"{kind}: entries and raw differ in length")
    return OutcomeDistribution(
        _frozen(entries, dtype=float), _frozen(raw, dtype=float)
    )


def _load_transfer(document: Document) -> TransferMap:
    matrix = _load_matrix(document, "transfer", real=True)
    offset = _field(document, "offset", "transfer", (int, float))
    return TransferMap(_frozen(matrix, dtype=float), float(offset))


def _load_initial(
    document: typing.Any, dim: int
) -> typing.Union[DensityMatrix, ProbVector]:
    if not isinstance(document, dict):
        raise SchemaError("circuit.initial: expected a state or probs object")
    kind = document.get("kind")
    if kind not in ("density", "probs"):
        raise SchemaError(
            f"circuit.initial: expected kind density or probs, got {kind!r}"
        )
    initial = from_json(document)
    if initial.dim != dim:
        raise SchemaError(
            f"circuit.initial: dimension {initial.dim}, expected {dim}"
        )
    return initial


def _load_circuit(document: Document) -> Circuit:
    kind = "circuit"
    dim = _dim(document, kind)
    initial = _load_initial(_field(document, "initial", kind), dim)
    steps = []
    for index, step in enumerate(_field(document, "steps", kind, list)):
        where = f"{kind}.steps[{index}]"
        if not isinstance(step, dict):
            raise SchemaError(f"{where}: expected an object")
        label = step.get("label")
        if label is not None and not isinstance(label, str):
            raise SchemaError(f"{where}: label must be a string")
        matrix = _load_square(step, "unitary", where, dim)
        steps.append(CircuitStep(validate_unitary(matrix), label))
    final = _field(document, "final_measurement", kind)
    if final != SIC_READOUT:
        if not isinstance(final, dict) or final.get("kind") != "povm":
            raise SchemaError(
                f"{kind}.final_measurement: expected a povm or '{SIC_READOUT}'"
            )
        final = _load_povm(final)
        if final.dim != dim:
            raise SchemaError(
                f"{kind}.final_measurement: dimension {final.dim}, "
                f"expected {dim}"
            )
    return Circuit(dim, initial, tuple(steps), final)


def _parse_deviation(value: typing.Any, where: str) -> float:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: deviations are written as strings")
    try:
        return float(value)
    except ValueError:
        raise SchemaError(f"{where}: not a number: {value!r}") from None


def _load_track_report(document: Document) -> TrackReport:
    kind = "track_report"
    outcomes = []
    for name in ("amplitude_outcome", "probability_outcome"):
        outcome = _field(document, name, kind)
        if not isinstance(outcome, dict):
            raise SchemaError(f"{kind}.{name}: expected a distribution")
        outcomes.append(_load_distribution(outcome))
    return TrackReport(
        amplitude_outcome=outcomes[0],
        probability_outcome=outcomes[1],
        max_abs_deviation=_parse_deviation(
            _field(document, "max_abs_deviation", kind),
            f"{kind}.max_abs_deviation",
        ),
        per_step_deviations=tuple(
            _parse_deviation(x, f"{kind}.per_step_deviations")
            for x in _field(document, "per_step_deviations", kind, list)
        ),
        representation=_field(document, "representation", kind, str),
    )


_LOADERS: typing.Dict[str, typing.Callable[[Document], typing.Any]] = {
    "density": _load_density,
    "unitary": _load_unitary,
    "povm": _load_povm,
    "fiducial": _load_fiducial,
    "sic": _load_sic,
    "verification": _load_verification,
    "search_result": _load_search_result,
    "probs": _load_probs,
    "cond_probs": _load_cond_probs,
    "mic": _load_mic,
    "distribution": _load_distribution,
    "transfer": _load_transfer,
    "circuit": _load_circuit,
    "track_report": _load_track_report,
}


def kinds() -> typing.Tuple[str, ...]:
    """The document kinds `from_json` can load."""
    return tuple(_LOADERS)


def from_json(
    document: typing.Any,
    expect: typing.Optional[typing.Collection[str]] = None,
):
    """Builds the object a JSON document describes.

    Parameters:
        document: A parsed JSON object with a "kind" field.
        expect: If given, the kinds that are acceptable here.

    Raises:
        SchemaError if the document does not match its schema, or its kind
        is unknown or not expected.
        Any invariant error of the described object, e.g. NotUnitary for a
        step of a circuit.
    """
    if not isinstance(document, dict):
        raise SchemaError("Expected a JSON object")
    kind = _field(document, "kind", "document", str)
    if kind not in _LOADERS:
        raise SchemaError(f"Unknown document kind '{kind}'")
    if expect is not None and kind not in expect:
        raise SchemaError(
            f"Expected a document of kind {' or '.join(sorted(expect))}, "
            f"got '{kind}'"
        )
    return _LOADERS[kind](document)


def dumps(document: Document) -> str:
    """Serializes a document; equal documents give identical text."""
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def decode(content: bytes) -> typing.Any:
    """Parses the bytes of a JSON file.

    Raises:
        SchemaError if `content` is not UTF-8 text.
        json.JSONDecodeError if it is text but not JSON.
    """
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError as error:
        raise SchemaError(
            f"Input is not UTF-8 text: {error.reason}"
        ) from None
    return json.loads(text)


def load(
    filepath: pathutils.Path,
    expect: typing.Optional[typing.Collection[str]] = None,
) -> typing.Any:
    """Reads and builds the object stored in a JSON file.

    Raises:
        FileNotFoundError, IsADirectoryError for a bad path.
        json.JSONDecodeError for a file that is not JSON.
        SchemaError for a file that is not UTF-8, and the errors of
        `from_json`.
    """
    return from_json(decode(pathutils.read_bytes(filepath)), expect)


def save(obj: typing.Any, filepath: pathutils.Path):
    """Writes `obj`, or an already built document, to a JSON file
    atomically."""
    document = obj if isinstance(obj, dict) else to_json(obj)
    pathutils.atomic_write_text(filepath, dumps(document))
