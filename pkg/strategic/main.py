#!/usr/bin/env python3
"""
main.py

Command-line front end of the strategic Perceptron laboratory.

Subcommands:
  run     Play one learner against rational (or replayed) agents on a
          fixture, a stream file or a generated stream; write the transcript
          and a summary JSON.
  verify  Run the acceptance suite; exit 1 if any check fails.
  sweep   Run a grid over alpha, gamma, R and d with several seeds each and
          write one row per (cell, seed) to sweep.csv.
  gen     Write a generated or fixture stream to JSON Lines.
  replay  Re-execute a JSONL transcript; exit 1 if any round differs.

Every flag can also be given in a JSON file passed with --config (keys are
the flag names with dashes turned into underscores); explicit flags win.
SPL_SEED sets the default seed.

Exit codes: 0 success, 1 check failure (verify, replay), 2 usage, 3 I/O.

Usage examples:
    python main.py run --learner strategic-l2 --fixture example2 --rounds 400 --out t.csv
    python main.py run --learner unknown-l2 --d 5 --R 10 --gamma 0.5 --alpha 3 --rounds 5000 --out u.csv
    python main.py verify --suite fixtures
    python main.py sweep --learner strategic-l2 --alpha-grid 0.5 1 2 --gamma-grid 0.1 0.5 1 --R-grid 5 --seeds 5
"""

import argparse
import json
import logging
import os
import sys
from typing import Dict, Iterable, List, Optional, Tuple

import pandas as pd

from core_types import (
    CostModel,
    L2Cost,
    Label,
    MarginTooDemandingError,
    ParameterError,
    StrategicError,
    StreamFormatError,
    WeightedL1Cost,
    norm,
)
from harness import (
    AGENT_KINDS,
    AgentConfig,
    LearnerConfig,
    Transcript,
    applicable_bounds,
    check_mistake_bound,
    replay_transcript,
    run_experiment,
    summarize,
)
from learners import LEARNER_IDS, NO_FAULTS
from streams import FIXTURES, StreamRecord, StreamSpec, generate_separable_stream, generated_meta, load_stream, save_stream, take
from transcripts import read_transcript_jsonl, write_transcript_csv, write_transcript_jsonl
from verify import FAULTS, SUITES, VerifyOptions, run_suite

# -----------------------------------------------------------------------------
# Constants
# -----------------------------------------------------------------------------

#: Rounds per run when neither flag nor config says otherwise.
DEFAULT_ROUNDS: int = 1000

#: Environment variable holding the default seed.
SEED_ENV_VAR: str = "SPL_SEED"

#: Default output file of the sweep subcommand.
DEFAULT_SWEEP_OUT: str = "sweep.csv"

#: Exit codes.
EXIT_OK: int = 0
EXIT_CHECK_FAILED: int = 1
EXIT_USAGE: int = 2
EXIT_IO: int = 3

#: Flags each subcommand needs, from the command line or the config file.
REQUIRED_FLAGS: Dict[str, Tuple[str, ...]] = {
    "run": ("learner",),
    "verify": (),
    "sweep": ("alpha_grid", "gamma_grid"),
    "gen": ("out",),
    "replay": ("transcript",),
}

#: Column order of sweep.csv.
SWEEP_COLUMNS: List[str] = [
    "learner",
    "d",
    "R",
    "gamma",
    "alpha",
    "seed",
    "rounds",
    "mistakes",
    "bound_id",
    "bound",
    "holds",
    "phases",
    "phase_up",
    "phase_down",
]


class CustomArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        sys.stderr.write(self.format_usage())
        if self.epilog:
            sys.stderr.write("\n" + self.epilog + "\n")
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# -----------------------------------------------------------------------------
# Configuration
# -----------------------------------------------------------------------------
def default_seed() -> int:
    value = os.environ.get(SEED_ENV_VAR)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        logging.warning(f"Ignoring non-integer {SEED_ENV_VAR}={value!r}.")
        return 0


def load_config(path: str) -> Dict[str, object]:
    """
    Read a JSON config file into a flat dict of flag values.

    Raises:
        OSError: when the file cannot be read.
        ParameterError: when it is not a JSON object.
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ParameterError(f"config {path}: invalid JSON ({e.msg})") from e
    if not isinstance(payload, dict):
        raise ParameterError(f"config {path}: expected a JSON object")
    return {key.replace("-", "_"): value for key, value in payload.items()}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="JSON file of flag values; explicit flags override it.")
    parser.add_argument("--verbose", action="store_true", help="Log per-round detail.")


def _add_stream_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fixture", choices=sorted(FIXTURES), help="Hand-built stream with its own cost model.")
    parser.add_argument("--stream", type=str, help="JSON Lines stream file to read.")
    parser.add_argument("--d", type=int, help="Dimension of a generated stream.")
    parser.add_argument("--R", type=float, help="Norm bound on true points.")
    parser.add_argument("--gamma", type=float, help="Margin; the learner's gamma for unknown-cost runs.")
    parser.add_argument("--label-mix", type=float, default=0.5, help="Share of positives (default: 0.5).")
    parser.add_argument(
        "--nonnegative", action="store_true", help="Draw a coordinatewise-nonnegative separator."
    )
    parser.add_argument("--seed", type=int, default=default_seed(), help=f"Seed (default: ${SEED_ENV_VAR} or 0).")


def build_parser() -> CustomArgumentParser:
    parser = CustomArgumentParser(
        description="Strategic Perceptron laboratory.",
        epilog="example: python main.py run --learner strategic-l2 --fixture example2 --rounds 400 --out t.csv",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CustomArgumentParser)

    run = sub.add_parser("run", help="Run one experiment.", epilog="example: python main.py run --learner classic --fixture example1-footnote --rounds 201")
    run.add_argument("--learner", choices=LEARNER_IDS, help="Learning algorithm (required).")
    run.add_argument("--agent", choices=AGENT_KINDS, default="rational", help="Agent behaviour (default: rational).")
    run.add_argument("--alpha", type=float, help="ℓ2 budget of the agents (and of known-cost learners).")
    run.add_argument("--alphas", type=float, nargs="+", help="Weighted-ℓ1 budgets, one per coordinate.")
    run.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help=f"Rounds to play (default: {DEFAULT_ROUNDS}).")
    run.add_argument(
        "--zero-prediction", type=int, choices=(1, -1), help="Label predicted while w = 0 (default: fixture's, else +1)."
    )
    run.add_argument("--out", type=str, default="transcript.csv", help="Transcript CSV path.")
    run.add_argument("--jsonl", type=str, help="Also write a hex-float JSONL transcript.")
    run.add_argument("--summary", type=str, help="Summary JSON path (default: next to --out).")
    run.add_argument("--max-period", type=int, default=8, help="Longest cycle period looked for (default: 8).")
    run.add_argument("--plant-fault", choices=sorted(FAULTS), help="Run a deliberately broken learner.")
    _add_stream_flags(run)
    _add_common(run)

    verify = sub.add_parser("verify", help="Run the acceptance suite.", epilog="example: python main.py verify --suite fixtures")
    verify.add_argument("--suite", choices=SUITES, default="all", help="Suite to run (default: all).")
    verify.add_argument("--seeds", type=int, default=VerifyOptions.seeds, help="Seeded runs per property check.")
    verify.add_argument("--rounds", type=int, default=VerifyOptions.rounds, help="Rounds per seeded run.")
    verify.add_argument("--unknown-runs", type=int, default=VerifyOptions.unknown_runs, help="Unknown-cost runs.")
    verify.add_argument(
        "--unknown-rounds", type=int, default=VerifyOptions.unknown_rounds, help="Round cap of each unknown-cost run."
    )
    verify.add_argument(
        "--oracle-instances", type=int, default=VerifyOptions.oracle_instances, help="Instances per oracle check."
    )
    verify.add_argument(
        "--oracle-step",
        type=float,
        default=VerifyOptions.oracle_step_fraction,
        help="Oracle grid spacing as a fraction of the budget.",
    )
    verify.add_argument("--plant-fault", choices=sorted(FAULTS), help="Verify a deliberately broken learner.")
    verify.add_argument("--report", type=str, help="Write the per-check report as JSON.")
    verify.add_argument("--seed", type=int, default=default_seed(), help=f"Seed (default: ${SEED_ENV_VAR} or 0).")
    _add_common(verify)

    sweep = sub.add_parser(
        "sweep",
        help="Run a parameter grid.",
        epilog="example: python main.py sweep --learner strategic-l2 --alpha-grid 0.5 1 2 --gamma-grid 0.1 0.5 1 --seeds 5",
    )
    sweep.add_argument("--learner", choices=("strategic-l2", "strategic-l1", "unknown-l2"), default="strategic-l2")
    sweep.add_argument("--alpha-grid", type=float, nargs="+", help="Agent budgets (required).")
    sweep.add_argument("--gamma-grid", type=float, nargs="+", help="Margins (required).")
    sweep.add_argument("--R-grid", type=float, nargs="+", default=[5.0], help="Norm bounds (default: 5).")
    sweep.add_argument("--d-grid", type=int, nargs="+", default=[2], help="Dimensions (default: 2).")
    sweep.add_argument("--seeds", type=int, default=5, help="Seeds per cell (default: 5).")
    sweep.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help=f"Rounds per run (default: {DEFAULT_ROUNDS}).")
    sweep.add_argument("--seed", type=int, default=default_seed(), help=f"First seed (default: ${SEED_ENV_VAR} or 0).")
    sweep.add_argument("--out", type=str, default=DEFAULT_SWEEP_OUT, help=f"Output CSV (default: {DEFAULT_SWEEP_OUT}).")
    _add_common(sweep)

    gen = sub.add_parser("gen", help="Write a stream to JSON Lines.", epilog="example: python main.py gen --d 5 --R 10 --gamma 0.5 --length 1000 --out s.jsonl")
    gen.add_argument("--length", type=int, default=DEFAULT_ROUNDS, help=f"Records to write (default: {DEFAULT_ROUNDS}).")
    gen.add_argument("--out", type=str, help="Output JSON Lines path (required).")
    _add_stream_flags(gen)
    _add_common(gen)

    replay = sub.add_parser("replay", help="Re-execute a JSONL transcript.", epilog="example: python main.py replay --transcript run.jsonl")
    replay.add_argument("--transcript", type=str, help="JSONL transcript written by run --jsonl (required).")
    _add_common(replay)

    parser.commands = {"run": run, "verify": verify, "sweep": sweep, "gen": gen, "replay": replay}
    return parser


def parse_args(argv: Optional[List[str]] = None) -> Tuple[argparse.ArgumentParser, argparse.Namespace]:
    """
    Parse argv, folding in --config values beneath the explicit flags.

    Returns the subcommand's parser, for usage errors, and the namespace.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    subparser = parser.commands[args.command]
    if args.config:
        config = load_config(args.config)
        config.pop("config", None)
        known = {action.dest for action in subparser._actions}
        unknown = sorted(set(config) - known - {"config"})
        if unknown:
            subparser.error(f"config {args.config}: unknown keys {', '.join(unknown)}")
        subparser.set_defaults(**config)
        args = parser.parse_args(argv)

    missing = [f"--{dest.replace('_', '-')}" for dest in REQUIRED_FLAGS[args.command] if getattr(args, dest) is None]
    if missing:
        subparser.error(f"the following arguments are required: {', '.join(missing)}")
    return subparser, args


# -----------------------------------------------------------------------------
# Streams and configs for run and gen
# -----------------------------------------------------------------------------
def cost_model_from_args(args: argparse.Namespace) -> Optional[CostModel]:
    if args.alphas is not None:
        return WeightedL1Cost(tuple(args.alphas))
    if args.alpha is not None:
        return L2Cost(args.alpha)
    return None


def resolve_stream(args: argparse.Namespace, length: int) -> Tuple[Iterable[StreamRecord], dict]:
    """
    The stream a run or gen command reads, with its metadata.

    Raises:
        ParameterError: when no stream source is complete.
        StreamFormatError / OSError: for an unreadable stream file.
    """
    if args.fixture:
        fixture = FIXTURES[args.fixture]
        return fixture.records(), fixture.meta()
    if args.stream:
        records = load_stream(args.stream)
        R = args.R if args.R is not None else max((norm(r.z) for r in records), default=0.0)
        return records, {"kind": "file", "path": args.stream, "R": R, "w_star": None, "separable": False}
    missing = [flag for flag, value in (("--d", args.d), ("--R", args.R), ("--gamma", args.gamma)) if value is None]
    if missing:
        raise ParameterError(f"a generated stream needs {', '.join(missing)} (or use --fixture / --stream)")
    spec = StreamSpec(
        d=args.d,
        R=args.R,
        gamma=args.gamma,
        length=length,
        seed=args.seed,
        label_mix=args.label_mix,
        coordinate_sign_constraint=args.nonnegative or getattr(args, "learner", None) in ("strategic-l1", "unknown-l1-single"),
    )
    return generate_separable_stream(spec), generated_meta(spec)


def run_configs(args: argparse.Namespace, stream_meta: dict) -> Tuple[LearnerConfig, AgentConfig]:
    """
    Learner and agent configs for the run subcommand.

    The agents' cost model comes from --alpha / --alphas, else from the
    fixture. Known-cost learners are told that budget; unknown-cost learners
    only get --R and --gamma.
    """
    model = cost_model_from_args(args)
    if model is None and args.fixture:
        model = FIXTURES[args.fixture].cost_model
    if args.agent == "rational" and model is None:
        raise ParameterError("rational agents need --alpha or --alphas")

    if args.zero_prediction is not None:
        zero_prediction = Label(args.zero_prediction)
    else:
        zero_prediction = Label(stream_meta.get("zero_prediction", int(Label.POSITIVE)))

    algorithm = args.learner
    R = args.R if args.R is not None else stream_meta.get("R")
    alpha = alphas = None
    if algorithm == "strategic-l2":
        if not isinstance(model, L2Cost):
            raise ParameterError("strategic-l2 needs an ℓ2 budget --alpha")
        alpha = model.alpha
    elif algorithm == "strategic-l1":
        if not isinstance(model, WeightedL1Cost):
            raise ParameterError("strategic-l1 needs budgets --alphas")
        alphas = model.alphas
        if R is None:
            raise ParameterError("strategic-l1 needs --R")

    learner_config = LearnerConfig(
        algorithm=algorithm,
        alpha=alpha,
        alphas=alphas,
        R=R if algorithm != "classic" else None,
        gamma=args.gamma if algorithm.startswith("unknown-") else None,
        zero_prediction=zero_prediction,
        faults=FAULTS[args.plant_fault] if args.plant_fault else NO_FAULTS,
    )
    return learner_config, AgentConfig(cost_model=model, kind=args.agent)


def _summary_path(args: argparse.Namespace) -> str:
    if args.summary:
        return args.summary
    return os.path.splitext(args.out)[0] + "_summary.json"


# -----------------------------------------------------------------------------
# Subcommands
# -----------------------------------------------------------------------------
def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.learner.startswith("unknown-") and (args.gamma is None or args.R is None):
        parser.error(f"{args.learner} needs both --R and --gamma")
    if args.rounds < 1:
        parser.error("--rounds must be >= 1")

    stream, stream_meta = resolve_stream(args, args.rounds)
    learner_config, agent_config = run_configs(args, stream_meta)
    transcript = run_experiment(learner_config, agent_config, stream, args.rounds, stream_meta=stream_meta)

    summary = summarize(transcript, max_period=args.max_period)
    write_transcript_csv(transcript, args.out)
    if args.jsonl:
        write_transcript_jsonl(transcript, args.jsonl)
    path = _summary_path(args)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    logging.info(
        f"{summary['total_mistakes']} mistakes in {summary['rounds']} rounds; "
        f"cycle period {summary['cycle_period']}; summary in '{path}'."
    )
    for formula_id, verdict in summary["bounds"].items():
        logging.info(f"Bound {formula_id}: {verdict['status']}.")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    options = VerifyOptions(
        seeds=args.seeds,
        rounds=args.rounds,
        unknown_runs=args.unknown_runs,
        unknown_rounds=args.unknown_rounds,
        oracle_instances=args.oracle_instances,
        oracle_step_fraction=args.oracle_step,
        seed=args.seed,
        faults=FAULTS[args.plant_fault] if args.plant_fault else NO_FAULTS,
    )
    results = run_suite(args.suite, options)
    failed = [r for r in results if not r.passed]
    if args.report:
        report = [
            {
                "name": r.name,
                "suites": list(r.suites),
                "passed": r.passed,
                "detail": r.detail,
                "ops": list(r.ops),
                "seconds": round(r.seconds, 3),
            }
            for r in results
        ]
        with open(args.report, "w", encoding="utf-8", newline="\n") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    if failed:
        logging.error(f"{len(failed)} of {len(results)} checks failed: {', '.join(r.name for r in failed)}")
        return EXIT_CHECK_FAILED
    logging.info(f"All {len(results)} checks passed.")
    return EXIT_OK


def _sweep_cells(args: argparse.Namespace) -> List[Tuple[int, float, float, float]]:
    return [
        (d, R, gamma, alpha)
        for d in args.d_grid
        for R in args.R_grid
        for gamma in args.gamma_grid
        for alpha in args.alpha_grid
    ]


def _sweep_row(args: argparse.Namespace, d: int, R: float, gamma: float, alpha: float, seed: int) -> dict:
    spec = StreamSpec(
        d=d, R=R, gamma=gamma, length=args.rounds, seed=seed, coordinate_sign_constraint=args.learner == "strategic-l1"
    )
    if args.learner == "strategic-l2":
        learner_config = LearnerConfig("strategic-l2", alpha=alpha)
        model: CostModel = L2Cost(alpha)
    elif args.learner == "strategic-l1":
        alphas = (alpha,) * d
        learner_config = LearnerConfig("strategic-l1", alphas=alphas, R=R)
        model = WeightedL1Cost(alphas)
    else:
        learner_config = LearnerConfig("unknown-l2", R=R, gamma=gamma)
        model = L2Cost(alpha)

    transcript = run_experiment(
        learner_config, AgentConfig(cost_model=model), generate_separable_stream(spec), args.rounds, generated_meta(spec)
    )
    bound_id = "theorem4" if args.learner == "unknown-l2" else applicable_bounds(args.learner)[0]
    check = check_mistake_bound(transcript, bound_id)
    summary = summarize(transcript)
    return {
        "learner": args.learner,
        "d": d,
        "R": R,
        "gamma": gamma,
        "alpha": alpha,
        "seed": seed,
        "rounds": len(transcript.rounds),
        "mistakes": transcript.total_mistakes,
        "bound_id": bound_id,
        "bound": check.bound,
        "holds": check.holds,
        "phases": summary["phases"],
        "phase_up": summary["phase_up"],
        "phase_down": summary["phase_down"],
    }


def cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.seeds < 1 or args.rounds < 1:
        parser.error("--seeds and --rounds must be >= 1")
    rows = []
    for d, R, gamma, alpha in _sweep_cells(args):
        if alpha > R or (args.learner == "unknown-l2" and alpha < gamma / 2.0):
            logging.warning(f"Skipping infeasible cell d={d} R={R} gamma={gamma} alpha={alpha}.")
            continue
        try:
            cell_rows = [_sweep_row(args, d, R, gamma, alpha, args.seed + k) for k in range(args.seeds)]
        except (MarginTooDemandingError, ParameterError) as e:
            logging.warning(f"Skipping cell d={d} R={R} gamma={gamma} alpha={alpha}: {e}")
            continue
        rows.extend(cell_rows)
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    frame.to_csv(args.out, index=False, lineterminator="\n")
    logging.info(f"Wrote {len(frame)} sweep rows to '{args.out}'.")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.length < 0:
        parser.error("--length must be >= 0")
    stream, _ = resolve_stream(args, args.length)
    save_stream(args.out, take(stream, args.length))
    return EXIT_OK


def cmd_replay(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    transcript: Transcript = read_transcript_jsonl(args.transcript)
    mismatches = replay_transcript(transcript)
    if mismatches:
        logging.error(f"Replay differs on {len(mismatches)} of {len(transcript.rounds)} rounds, first t={mismatches[0]}.")
        return EXIT_CHECK_FAILED
    logging.info(f"Replay of {len(transcript.rounds)} rounds matches exactly.")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "gen": cmd_gen,
    "replay": cmd_replay,
}


# -----------------------------------------------------------------------------
# Main Entry Point
# -----------------------------------------------------------------------------
def main(argv: Optional[List[str]] = None) -> int:
    """
    Dispatch to a subcommand and return its exit code.

    Library errors become log lines: parameter and dimension problems exit
    2, unreadable or malformed files exit 3.
    """
    try:
        parser, args = parse_args(argv)
    except (OSError, ParameterError) as e:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
        logging.error(f"Cannot load config: {e}")
        return EXIT_IO if isinstance(e, OSError) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    try:
        return COMMANDS[args.command](args, parser)
    except (StreamFormatError, OSError) as e:
        logging.error(f"I/O error: {e}")
        return EXIT_IO
    except (StrategicError, ValueError) as e:
        logging.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE


# -----------------------------------------------------------------------------
# Script Execution
# -----------------------------------------------------------------------------
if __name__ == "__main__":
    sys.exit(main())
