"""
Command-line entry point.

    dgl check FILE
    dgl query FILE [--query ATOM] [--evidence ATOM]... [--not-evidence ATOM]... [--params FILE] [--cap N]
    dgl train FILE --data CSV [--epochs N] [--lr F] [--seed S] [--out DIR] ...
    dgl experiment NAME [--seed S] [--reps R] [--out DIR] [--size N] [--epochs N]

Results go to standard output (JSON) or files; diagnostics and logs go to
standard error. Exit codes: 0 ok, 1 domain error, 2 I/O error, 3 refused
(enumeration cap).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from logging_setup import Component, get_logger, setup_logging
from observability.events import cli_emitter

from .config import get_config
from .engine.inference import answer_program_queries, conditional, marginal
from .errors import DeepGraphLogError, ErrorHandler
from .experiments.runner import run_experiment
from .experiments.spec import load_dataset_spec
from .frontend.program import Evidence, Program
from .frontend.parser import parse_atom
from .frontend.validate import load_program
from .training.data import load_examples
from .training.optim import OPTIMIZERS
from .training.store import ParamStore
from .training.trainer import TrainOptions, fit, write_epoch_log

logger = get_logger(Component.CLI)

_LEVELS = ["ERROR", "WARNING", "INFO", "DEBUG"]


def _read_program(path: str) -> Program:
    source = Path(path).read_text(encoding="utf-8")
    program = load_program(source, path)
    cli_emitter.program_checked("cli", path, program.statement_count(), len(program.gnn_schemas))
    return program


def cmd_check(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    print(f"{args.file}: ok ({program.statement_count()} statements)", file=sys.stderr)
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    store = ParamStore.load(args.params, program) if args.params else ParamStore.for_program(program, args.seed)
    evidence = [Evidence(parse_atom(e), True) for e in args.evidence]
    evidence += [Evidence(parse_atom(e), False) for e in args.not_evidence]

    if args.query is None:
        results = answer_program_queries(program, store, cap=args.cap, run_id="cli")
        print(json.dumps([r.to_dict() for r in results], sort_keys=True))
        return 0
    if evidence:
        result = conditional(args.query, evidence, program, store, cap=args.cap, run_id="cli")
    else:
        result = marginal(args.query, program, store, cap=args.cap, run_id="cli")
    print(result.to_json())
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    examples = load_examples(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = ParamStore.load(args.params, program) if args.params else None
    options = TrainOptions(
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        optimizer=args.optimizer,
        batch_size=args.batch_size,
        cap=args.cap,
        run_id=f"train-{args.seed}",
    )
    store, report = fit(examples, program, store, options)
    store.save(out / "params.json")
    write_epoch_log(report, out / "log.csv", timings=args.timings)
    logger.info("training written", out=str(out), final_loss=report.final_loss)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    overrides = {"size": {"train": args.size}, "training": {"epochs": args.epochs}}
    spec = load_dataset_spec(args.name, overrides)
    rows = run_experiment(args.name, spec, repetitions=args.reps, out=args.out, seed=args.seed)
    for row in rows:
        print(f"{row.metric}\t{row.mean:.4f}\t{row.stddev:.4f}\t{row.n}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgl", description="Probabilistic logic programs with graph neural facts.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="parse and validate a program")
    check.add_argument("file")
    check.set_defaults(handler=cmd_check)

    query = sub.add_parser("query", help="marginal or conditional probability of a ground atom")
    query.add_argument("file")
    query.add_argument("--query", help="ground atom; omitted: answer the program's query/evidence directives")
    query.add_argument("--evidence", action="append", default=[], metavar="ATOM", help="observed true")
    query.add_argument("--not-evidence", action="append", default=[], metavar="ATOM", help="observed false")
    query.add_argument("--params", help="parameter snapshot written by 'dgl train'")
    query.add_argument("--cap", type=int, help="relevant-fact enumeration cap")
    query.add_argument("--seed", type=int, default=0, help="initialisation seed when no --params are given")
    query.set_defaults(handler=cmd_query)

    train = sub.add_parser("train", help="learn fact probabilities and network weights")
    train.add_argument("file")
    train.add_argument("--data", required=True, help="CSV with query,target[,weight]")
    train.add_argument("--epochs", type=int, default=50)
    train.add_argument("--lr", type=float, default=0.01)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", default=".")
    train.add_argument("--optimizer", choices=sorted(OPTIMIZERS), default="adam")
    train.add_argument("--batch-size", type=int)
    train.add_argument("--params", help="warm start from a parameter snapshot")
    train.add_argument("--cap", type=int)
    train.add_argument("--timings", action="store_true", help="record per-epoch wall time in log.csv")
    train.set_defaults(handler=cmd_train)

    experiment = sub.add_parser("experiment", help="run an experiment over repeated seeds")
    experiment.add_argument("name")
    experiment.add_argument("--seed", type=int, default=0)
    experiment.add_argument("--reps", type=int, default=1)
    experiment.add_argument("--out", help="output root (default: DGL_RUNS_DIR)")
    experiment.add_argument("--size", type=int, help="training-set size override")
    experiment.add_argument("--epochs", type=int, help="epoch count override")
    experiment.set_defaults(handler=cmd_experiment)
    return parser


def _log_level(args: argparse.Namespace) -> str:
    if args.quiet:
        return "ERROR"
    base = _LEVELS.index(get_config().log_level) if get_config().log_level in _LEVELS else 1
    return _LEVELS[min(len(_LEVELS) - 1, base + args.verbose)]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = get_config()
    setup_logging(level=_log_level(args), use_json=config.log_format == "json")
    source = getattr(args, "file", None)
    try:
        return args.handler(args)
    except (DeepGraphLogError, OSError) as exc:
        category = ErrorHandler.handle_error(exc, run_id="cli", source=source)
        if isinstance(exc, DeepGraphLogError):
            print(exc.diagnostic(file=source), file=sys.stderr)
        else:
            print(f"{source or 'dgl'}: error: {exc}", file=sys.stderr)
        return ErrorHandler.exit_code(category)


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
