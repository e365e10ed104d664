"""The `sicprob` command line.

Subcommands:

    sicprob sic find --dim 4 --seed 0 --out sic-d4.json
    sicprob sic verify --in sic-d4.json
    sicprob sic builtin --dim 3 --out fiducial-d3.json
    sicprob convert --to probs --in state.json --sic fiducial-d3.json
    sicprob born --state state.json --povm povm.json --sic fiducial-d3.json
    sicprob simulate --circuit circuit.json --track both --report out.json

Summaries go to standard output, JSON reports only to the `--out` or
`--report` file. Every report is a `{"manifest": ..., "result": ...}`
document; the result part depends only on the inputs and the seeds.
"""
import argparse
import enum
import hashlib
import json
import logging
import os
import sys
import time
import typing

import numpy as np  # type: ignore

from . import codec, pathutils
from .__version__ import __version__
from .dualtrack import (
    SIC_READOUT,
    Representation,
    amplitude_readout,
    probability_readout,
    representation_name,
    run_amplitude,
    run_dual,
    run_probability,
    to_probs,
    to_state,
)
from .errors import NotAQuantumState, SicProbError
from .quantum import COMPARISON_TOL, Povm
from .search import SearchConfig, search
from .sic import (
    CERTIFICATION_TOL,
    Fiducial,
    SicStructure,
    builtin_dimensions,
    builtin_fiducial,
    orbit,
    require_certified,
)
from .urgleichung import (
    classical_ltp,
    cond_prob_matrix,
    ltp_deviation,
    orbit_mic,
)

logger = logging.getLogger(__name__)


class ExitStatus(enum.IntEnum):
    OK = 0
    VERIFY_FAILED = 1
    INVALID_INPUT = 2
    NOT_FOUND = 3
    INTERNAL_ERROR = 4


class UsageError(SicProbError):
    """A command is missing an input it needs."""


class RunManifest(typing.NamedTuple):
    """How a report was produced.

    Attributes:
        input_digests: SHA-256 of every input file, keyed by the path given
            on the command line.
        wall_time: Seconds from parsing the arguments to writing the report.
    """

    command_line: typing.Tuple[str, ...]
    seeds: typing.Dict[str, int]
    version: str
    input_digests: typing.Dict[str, str]
    wall_time: float

    def to_json(self) -> codec.Document:
        return {
            "command_line": list(self.command_line),
            "seeds": dict(self.seeds),
            "version": self.version,
            "input_digests": dict(self.input_digests),
            "wall_time": self.wall_time,
        }


class _Session:
    """Loads the inputs of one command and writes its report."""

    def __init__(self, argv: typing.Sequence[str], quiet: bool = False):
        self.argv = tuple(argv)
        self.quiet = quiet
        self.seeds: typing.Dict[str, int] = {}
        self.digests: typing.Dict[str, str] = {}
        self.started = time.perf_counter()

    def echo(self, text: str):
        if not self.quiet:
            print(text)

    def load(self, filepath: str, expect: typing.Collection[str]):
        content = pathutils.read_bytes(filepath)
        self.digests[filepath] = hashlib.sha256(content).hexdigest()
        return codec.from_json(codec.decode(content), expect)

    def manifest(self) -> RunManifest:
        return RunManifest(
            command_line=self.argv,
            seeds=self.seeds,
            version=__version__,
            input_digests=self.digests,
            wall_time=time.perf_counter() - self.started,
        )

    def report(self, filepath: typing.Optional[str], result: typing.Any):
        if filepath is None:
            return
        document = result if isinstance(result, dict) else codec.to_json(
            result
        )
        envelope = {"manifest": self.manifest().to_json(), "result": document}
        codec.save(envelope, filepath)
        logger.info("Wrote %s", filepath)


def _format_probabilities(values: np.ndarray) -> str:
    return " ".join(f"{x:.12f}" for x in values)


def _representation(
    args: argparse.Namespace, session: _Session, required: bool = True
) -> typing.Optional[Representation]:
    """The SIC or MIC named by --sic / --mic.

    A fiducial file stands for its WH orbit in either role.
    """
    if args.sic and args.mic:
        raise UsageError("Give either --sic or --mic, not both.")
    if args.sic:
        loaded = session.load(args.sic, {"sic", "fiducial"})
        sic = orbit(loaded) if isinstance(loaded, Fiducial) else loaded
        return require_certified(sic)
    if args.mic:
        loaded = session.load(args.mic, {"mic", "fiducial"})
        return orbit_mic(loaded) if isinstance(loaded, Fiducial) else loaded
    if required:
        raise UsageError("This command needs --sic or --mic.")
    return None


def _sic_find(args: argparse.Namespace, session: _Session) -> ExitStatus:
    config = SearchConfig(
        dim=args.dim,
        seed=args.seed,
        max_restarts=args.restarts,
        max_iterations=args.iterations,
        target_residual=args.target,
    )
    session.seeds["search"] = args.seed
    result = search(config, jobs=args.jobs)
    summary = (
        f"d={result.dim} residual {result.residual:.3e} after "
        f"{result.restarts_used} restart(s), "
        f"{result.iterations_used} iteration(s)"
    )
    session.report(args.out, result)
    if not result.found:
        logger.warning("No SIC fiducial found: %s", summary)
        return ExitStatus.NOT_FOUND
    session.echo(f"found: {summary}")
    return ExitStatus.OK


def _sic_verify(args: argparse.Namespace, session: _Session) -> ExitStatus:
    loaded = session.load(args.input, {"sic", "fiducial"})
    sic = orbit(loaded) if isinstance(loaded, Fiducial) else loaded
    verification = sic.verification
    session.echo(f"residual:       {verification.residual:.6e}")
    session.echo(f"povm_deviation: {verification.povm_deviation:.6e}")
    session.echo(f"worst pair:     {verification.report.worst_pair}")
    session.report(args.out, verification)
    if verification.residual <= args.tol:
        return ExitStatus.OK
    logger.warning(
        "Not a SIC: residual %.3e exceeds %.1e",
        verification.residual,
        args.tol,
    )
    return ExitStatus.VERIFY_FAILED


def _sic_builtin(args: argparse.Namespace, session: _Session) -> ExitStatus:
    fiducial = builtin_fiducial(args.dim)
    session.echo(" ".join(f"{z:.16f}" for z in fiducial.vector))
    session.report(args.out, fiducial)
    return ExitStatus.OK


def _convert(args: argparse.Namespace, session: _Session) -> ExitStatus:
    rep = _representation(args, session)
    if args.to == "probs":
        rho = session.load(args.input, {"density"})
        converted = to_probs(rho, rep)
        session.echo(_format_probabilities(converted.entries))
        session.report(args.out, converted)
        return ExitStatus.OK
    p = session.load(args.input, {"probs"})
    try:
        converted = to_state(p, rep, args.tol)
    except NotAQuantumState as error:
        logger.warning("%s", error)
        session.echo(
            f"not a quantum state: min eigenvalue {error.min_eigenvalue:.6e}"
        )
        session.report(args.out, error)
        return ExitStatus.VERIFY_FAILED
    session.echo(f"purity: {converted.purity:.12f}")
    session.report(args.out, converted)
    return ExitStatus.OK


def _born(args: argparse.Namespace, session: _Session) -> ExitStatus:
    """Computes every requested rule first, then prints, so a failing
    command leaves standard output empty."""
    method = args.method
    rep = _representation(args, session, required=method != "direct")
    if method == "ltp" and not isinstance(rep, SicStructure):
        raise UsageError("--method ltp needs a SIC (--sic).")
    if args.state is None and args.probs is None:
        raise UsageError("'born' needs --state or --probs.")
    rho = session.load(args.state, {"density"}) if args.state else None
    p = session.load(args.probs, {"probs"}) if args.probs else None
    if args.povm == SIC_READOUT:
        if rep is None:
            raise UsageError("--povm sic needs --sic or --mic.")
        povm = Povm(rep.effects)
    else:
        povm = session.load(args.povm, {"povm"})
    result: codec.Document = {"kind": "born_report", "method": method}
    lines: typing.List[str] = []
    status = ExitStatus.OK
    if method in ("direct", "both"):
        if rho is None:
            if rep is None:
                raise UsageError("--probs needs --sic or --mic.")
            rho = to_state(p, rep)
        direct = amplitude_readout(rho, povm, rep)
        lines.append(f"direct:      {_format_probabilities(direct.entries)}")
        result["direct"] = codec.to_json(direct)
    if method != "direct":
        assert rep is not None
        if p is None:
            p = to_probs(rho, rep)
        urgleichung = probability_readout(p, povm, rep)
        lines.append(
            f"urgleichung: {_format_probabilities(urgleichung.entries)}"
        )
        result["urgleichung"] = codec.to_json(urgleichung)
    if method == "both":
        deviation = float(np.max(np.abs(direct.raw - urgleichung.raw)))
        lines.append(f"max deviation: {deviation:.6e}")
        result["max_abs_deviation"] = codec.format_deviation(deviation)
        if deviation > args.tol:
            logger.warning(
                "Born rules disagree by %.3e > %.1e", deviation, args.tol
            )
            status = ExitStatus.VERIFY_FAILED
    elif method == "ltp":
        assert isinstance(rep, SicStructure)
        r = cond_prob_matrix(povm, rep)
        classical = classical_ltp(p, r)
        deviation = ltp_deviation(p, r, p.dim)
        lines.append(
            f"classical:   {_format_probabilities(classical.entries)}"
        )
        lines.append(f"ltp_deviation: {deviation:.12f}")
        result["classical"] = codec.to_json(classical)
        result["ltp_deviation"] = codec.format_deviation(deviation)
    for line in lines:
        session.echo(line)
    session.report(args.out, result)
    return status


def _default_representation(
    dim: int, args: argparse.Namespace, session: _Session
) -> Representation:
    """A built-in SIC, else a searched one, else the orbit MIC of the best
    search candidate."""
    if dim in builtin_dimensions():
        return orbit(builtin_fiducial(dim))
    session.seeds["search"] = args.seed
    result = search(SearchConfig(dim=dim, seed=args.seed), jobs=args.jobs)
    if result.found:
        return require_certified(orbit(result.fiducial))
    logger.warning(
        "No SIC found in d=%d (residual %.3e); using a WH-orbit MIC instead",
        dim,
        result.residual,
    )
    return orbit_mic(result.candidate)


def _simulate(args: argparse.Namespace, session: _Session) -> ExitStatus:
    circuit = session.load(args.circuit, {"circuit"})
    rep = _representation(args, session, required=False)
    if rep is None:
        rep = _default_representation(circuit.dim, args, session)
    session.echo(
        f"d={circuit.dim}, {len(circuit.steps)} step(s), "
        f"{representation_name(rep).upper()} representation"
    )
    if args.track == "amplitude":
        outcome = run_amplitude(circuit, rep)
    elif args.track == "probability":
        outcome = run_probability(circuit, rep)
    else:
        report = run_dual(circuit, rep)
        session.echo(
            f"amplitude:   "
            f"{_format_probabilities(report.amplitude_outcome.entries)}"
        )
        session.echo(
            f"probability: "
            f"{_format_probabilities(report.probability_outcome.entries)}"
        )
        session.echo(f"max deviation: {report.max_abs_deviation:.6e}")
        session.report(args.out, report)
        if report.max_abs_deviation <= args.tol:
            return ExitStatus.OK
        logger.warning(
            "Tracks disagree by %.3e > %.1e",
            report.max_abs_deviation,
            args.tol,
        )
        return ExitStatus.VERIFY_FAILED
    session.echo(f"{args.track}: {_format_probabilities(outcome.entries)}")
    session.report(args.out, outcome)
    return ExitStatus.OK


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-q", "--quiet", action="store_true", help="only log warnings"
    )
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="log debug messages"
    )
    return common


def _add_representation_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--sic", help="SIC or fiducial file of the SIC representation"
    )
    parser.add_argument(
        "--mic", help="MIC or fiducial file, for a MIC representation"
    )


def _add_search_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--jobs",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes for search restarts (default: all CPUs)",
    )


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="sicprob",
        description="SIC representations of quantum states and dynamics.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="group", metavar="command")
    commands.required = True

    sic = commands.add_parser("sic", help="find and check SICs")
    sic_commands = sic.add_subparsers(dest="sic_command", metavar="command")
    sic_commands.required = True

    find = sic_commands.add_parser(
        "find", parents=[common], help="search for a SIC fiducial"
    )
    find.add_argument("--dim", type=int, required=True)
    _add_search_flags(find)
    find.add_argument("--restarts", type=int, default=64)
    find.add_argument("--iterations", type=int, default=20000)
    find.add_argument("--target", type=float, default=1e-9)
    find.add_argument("--out", "--report", dest="out")
    find.set_defaults(command=_sic_find)

    verify = sic_commands.add_parser(
        "verify", parents=[common], help="check a SIC or fiducial file"
    )
    verify.add_argument("--in", dest="input", required=True)
    verify.add_argument("--tol", type=float, default=CERTIFICATION_TOL)
    verify.add_argument("--out", "--report", dest="out")
    verify.set_defaults(command=_sic_verify)

    builtin = sic_commands.add_parser(
        "builtin", parents=[common], help="write a built-in fiducial"
    )
    builtin.add_argument("--dim", type=int, required=True)
    builtin.add_argument("--out", "--report", dest="out")
    builtin.set_defaults(command=_sic_builtin)

    convert = commands.add_parser(
        "convert", parents=[common], help="state ↔ probability vector"
    )
    convert.add_argument("--to", choices=("probs", "state"), required=True)
    convert.add_argument("--in", dest="input", required=True)
    _add_representation_flags(convert)
    convert.add_argument("--tol", type=float, default=COMPARISON_TOL)
    convert.add_argument("--out", "--report", dest="out")
    convert.set_defaults(command=_convert)

    born = commands.add_parser(
        "born", parents=[common], help="outcome probabilities of a POVM"
    )
    initial = born.add_mutually_exclusive_group()
    initial.add_argument("--state", help="density matrix file")
    initial.add_argument("--probs", help="probability vector file")
    born.add_argument(
        "--povm",
        required=True,
        help=f"POVM file, or '{SIC_READOUT}' for the SIC measurement",
    )
    _add_representation_flags(born)
    born.add_argument(
        "--method",
        choices=("direct", "urgleichung", "both", "ltp"),
        default="both",
    )
    born.add_argument("--tol", type=float, default=COMPARISON_TOL)
    born.add_argument("--out", "--report", dest="out")
    born.set_defaults(command=_born)

    simulate = commands.add_parser(
        "simulate", parents=[common], help="run a circuit on both tracks"
    )
    simulate.add_argument("--circuit", required=True)
    _add_representation_flags(simulate)
    simulate.add_argument(
        "--track",
        choices=("amplitude", "probability", "both"),
        default="both",
    )
    _add_search_flags(simulate)
    simulate.add_argument("--tol", type=float, default=COMPARISON_TOL)
    simulate.add_argument("--report", "--out", dest="out")
    simulate.set_defaults(command=_simulate)
    return parser


def _configure_logging(args: argparse.Namespace):
    logging.basicConfig(
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    if getattr(args, "quiet", False):
        level = logging.WARNING
    elif getattr(args, "verbose", False):
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.getLogger("sicprob").setLevel(level)


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    """Runs one command and returns its ExitStatus code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        # --help, --version and usage errors
        return int(stop.code or 0)
    _configure_logging(args)
    session = _Session(argv, quiet=args.quiet)
    try:
        return int(args.command(args, session))
    except (SicProbError, json.JSONDecodeError, OSError) as error:
        logger.error("%s: %s", type(error).__name__, error)
        return int(ExitStatus.INVALID_INPUT)
    except Exception:
        logger.exception("Internal error")
        return int(ExitStatus.INTERNAL_ERROR)
