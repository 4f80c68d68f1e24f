"""
Repeated experiment runs: one directory per seed plus an aggregate table.

    runs/<exp>/<seed>/metrics.csv     metric,value
    runs/<exp>/<seed>/<variant>.dgl   a generated training program per variant
    runs/<exp>/aggregate.csv          metric,mean,stddev,n
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from logging_setup import Component, get_logger
from observability.events import experiments_emitter

from ..config import get_config
from ..errors import DataError, UnknownExperimentError
from . import e1, e2, e3, e4
from .harness import Variant, write_programs
from .metrics import AggregateRow, MetricReport, aggregate, write_aggregate
from .spec import DatasetSpec, load_dataset_spec

logger = get_logger(Component.EXPERIMENTS)

Runner = Callable[[DatasetSpec, str], Tuple[MetricReport, List[Variant]]]

RUNNERS: Dict[str, Runner] = {"e1": e1.run, "e2": e2.run, "e3": e3.run, "e4": e4.run}


def run_once(name: str, spec: DatasetSpec, out_dir: Optional[Path] = None) -> MetricReport:
    """Generate, train and evaluate once for ``spec.seed``."""
    try:
        runner = RUNNERS[name]
    except KeyError:
        raise UnknownExperimentError(f"unknown experiment '{name}'", token=name) from None
    run_id = f"{name}-{spec.seed}"
    started = time.perf_counter()
    report, variants = runner(spec, run_id)
    if out_dir is not None:
        seed_dir = out_dir / name / str(spec.seed)
        write_programs(seed_dir, variants)
        report.write_csv(seed_dir / "metrics.csv")
    experiments_emitter.experiment_run_completed(run_id, name, spec.seed, dict(sorted(report.values.items())))
    logger.info("experiment run finished", run_id=run_id, seconds=round(time.perf_counter() - started, 3))
    return report


def run_experiment(
    name: str,
    spec: Optional[DatasetSpec] = None,
    repetitions: int = 1,
    out: Optional[str | Path] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[AggregateRow]:
    """
    Run ``repetitions`` seeds (``seed``, ``seed + 1``, ...) and aggregate.
    Repetitions may run concurrently; reports are merged in seed order.
    """
    if name not in RUNNERS:
        raise UnknownExperimentError(f"unknown experiment '{name}'", token=name)
    if repetitions < 1:
        raise DataError(f"repetitions must be at least 1, got {repetitions}")
    spec = spec if spec is not None else load_dataset_spec(name)
    base = spec.seed if seed is None else seed
    out_dir = Path(out if out is not None else get_config().runs_dir)
    seeds = [base + i for i in range(repetitions)]
    workers = min(repetitions, workers if workers is not None else get_config().worker_count())

    logger.info("experiment started", experiment=name, seeds=seeds, workers=workers)
    specs = [spec.with_seed(s) for s in seeds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda s: run_once(name, s, out_dir), specs))
    else:
        reports = [run_once(name, s, out_dir) for s in specs]

    rows = aggregate(reports)
    (out_dir / name).mkdir(parents=True, exist_ok=True)
    write_aggregate(rows, out_dir / name / "aggregate.csv")
    logger.info("experiment finished", experiment=name, repetitions=repetitions, out=str(out_dir / name))
    return rows
