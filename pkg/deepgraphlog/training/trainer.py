"""
Joint training of learnable fact probabilities and network weights from
query-level supervision.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from logging_setup import Component, get_logger
from observability.events import trainer_emitter

from ..errors import TrainingError
from ..engine.inference import QueryPlan, compile_query, evaluate_plan
from ..frontend.program import Program
from .data import TrainingExample
from .optim import StoreGradient, make_optimizer
from .store import ParamStore

logger = get_logger(Component.TRAINER)

CLAMP = 1e-7


def cross_entropy(p: float, target: float) -> float:
    c = min(1.0 - CLAMP, max(CLAMP, p))
    return -(target * math.log(c) + (1.0 - target) * math.log(1.0 - c))


def cross_entropy_grad(p: float, target: float) -> float:
    """dL/dp; zero where the clamp is active."""
    if p < CLAMP or p > 1.0 - CLAMP:
        return 0.0
    return -(target / p) + (1.0 - target) / (1.0 - p)


class PlanCache:
    """Compiled query plans per (program, query)."""

    def __init__(self, cap: Optional[int] = None):
        self.cap = cap
        self._plans: Dict[Tuple[int, str], Tuple[Program, QueryPlan]] = {}

    def plan(self, example: TrainingExample, program: Program) -> QueryPlan:
        program = example.program or program
        key = (id(program), str(example.query))
        hit = self._plans.get(key)
        if hit is None or hit[0] is not program:
            hit = (program, compile_query(example.query, program, cap=self.cap))
            self._plans[key] = hit
        return hit[1]


def loss(
    batch: Sequence[TrainingExample],
    program: Program,
    store: ParamStore,
    plans: Optional[PlanCache] = None,
) -> float:
    """Weighted cross-entropy, summed over the batch and divided by its size."""
    plans = plans or PlanCache()
    total = 0.0
    for ex in batch:
        p = evaluate_plan(plans.plan(ex, program), store).probability
        total += ex.weight * cross_entropy(p, ex.target)
    return total / max(1, len(batch))


def grad(
    batch: Sequence[TrainingExample],
    program: Program,
    store: ParamStore,
    plans: Optional[PlanCache] = None,
) -> Tuple[float, StoreGradient]:
    """Loss and its exact gradient with respect to every fact logit and network weight."""
    plans = plans or PlanCache()
    n = max(1, len(batch))
    total = 0.0
    gradient = StoreGradient()
    for ex in batch:
        outcome = evaluate_plan(plans.plan(ex, program), store, want_grad=True)
        p = outcome.probability
        total += ex.weight * cross_entropy(p, ex.target)
        scale = ex.weight * cross_entropy_grad(p, ex.target) / n
        if scale == 0.0:
            continue
        step = StoreGradient(models=outcome.gradient.models)
        for pid, d in outcome.gradient.facts.items():
            q = store.fact_probability(pid)
            step.facts[pid] = d * q * (1.0 - q)
        gradient.add_(step, scale)
    return total / n, gradient


def fact_prior(store: ParamStore, weight: float) -> Tuple[float, StoreGradient]:
    """``weight * sum(p)`` over every learnable fact probability, with its gradient in logit space."""
    gradient = StoreGradient()
    total = 0.0
    for pid in store.fact_logits:
        q = store.fact_probability(pid)
        total += q
        gradient.facts[pid] = weight * q * (1.0 - q)
    return weight * total, gradient


@dataclass(frozen=True)
class TrainOptions:
    epochs: int = 50
    learning_rate: float = 0.01
    seed: int = 0
    optimizer: str = "adam"
    batch_size: Optional[int] = None  # full batch
    clip_norm: float = 10.0
    cap: Optional[int] = None
    run_id: Optional[str] = None
    # sparsity prior on learnable facts; facts the data never asks for decay to 0
    fact_penalty: float = 0.0


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    grad_norm: float
    seconds: float = field(default=0.0, compare=False)


@dataclass
class TrainReport:
    epochs: List[EpochRecord] = field(default_factory=list)
    optimizer: Dict[str, float | str] = field(default_factory=dict)
    fact_probabilities: Dict[str, float] = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)

    @property
    def losses(self) -> List[float]:
        return [e.loss for e in self.epochs]

    @property
    def final_loss(self) -> float:
        return self.epochs[-1].loss if self.epochs else float("nan")


def _batches(examples: Sequence[TrainingExample], size: Optional[int], rng: np.random.Generator):
    if not size or size >= len(examples):
        return [list(examples)]
    order = rng.permutation(len(examples))
    return [[examples[i] for i in order[s:s + size]] for s in range(0, len(examples), size)]


def fit(
    train: Sequence[TrainingExample],
    program: Program,
    store: Optional[ParamStore] = None,
    options: TrainOptions = TrainOptions(),
) -> Tuple[ParamStore, TrainReport]:
    """
    Minimise the training loss with the chosen first-order optimizer.

    Deterministic for a given seed: the seed drives initialisation of
    missing parameters and mini-batch shuffling.
    """
    run_id = options.run_id or f"train-{options.seed}"
    log = logger.with_run(run_id)
    rng = np.random.default_rng(options.seed)
    store = store if store is not None else ParamStore()
    seen = set()
    for prog in [program] + [ex.program for ex in train if ex.program is not None]:
        if id(prog) not in seen:
            seen.add(id(prog))
            store.ensure(prog, rng)

    optimizer = make_optimizer(options.optimizer, options.learning_rate)
    plans = PlanCache(options.cap)
    report = TrainReport(optimizer={**optimizer.settings(), "clip_norm": options.clip_norm})
    log.info("training started", examples=len(train), epochs=options.epochs, **optimizer.settings())

    started = time.perf_counter()
    for epoch in range(1, options.epochs + 1):
        epoch_start = time.perf_counter()
        batches = _batches(train, options.batch_size, rng)
        epoch_loss = 0.0
        norms = []
        for batch in batches:
            batch_loss, gradient = grad(batch, program, store, plans)
            if options.fact_penalty > 0.0:
                prior, prior_grad = fact_prior(store, options.fact_penalty)
                batch_loss += prior
                gradient.add_(prior_grad)
            epoch_loss += batch_loss * len(batch)
            if not math.isfinite(batch_loss):
                break
            norms.append(gradient.clip_(options.clip_norm))
            optimizer.step(store, gradient)
        epoch_loss /= max(1, len(train))

        if not math.isfinite(epoch_loss) or not store.is_finite():
            reason = "non-finite loss" if not math.isfinite(epoch_loss) else "non-finite parameters"
            trainer_emitter.training_aborted(run_id, epoch, reason)
            raise TrainingError(f"{reason} at epoch {epoch}", epoch=epoch)

        grad_norm = float(np.mean(norms)) if norms else 0.0
        record = EpochRecord(epoch, epoch_loss, grad_norm, time.perf_counter() - epoch_start)
        report.epochs.append(record)
        trainer_emitter.epoch_completed(run_id, epoch, epoch_loss, grad_norm)

    report.fact_probabilities = store.fact_probabilities()
    report.wall_time = time.perf_counter() - started
    log.info("training finished", epochs=len(report.epochs), final_loss=report.final_loss)
    return store, report


def write_epoch_log(report: TrainReport, path: str | Path, timings: bool = False) -> None:
    """``epoch,loss,grad_norm,seconds``; seconds stays blank unless ``timings``."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "loss", "grad_norm", "seconds"])
        for e in report.epochs:
            writer.writerow([e.epoch, repr(float(e.loss)), repr(float(e.grad_norm)), f"{e.seconds:.6f}" if timings else ""])


def predict(
    queries: Sequence[TrainingExample],
    program: Program,
    store: ParamStore,
    plans: Optional[PlanCache] = None,
) -> List[float]:
    """Marginal probability of each example's query under ``store``."""
    plans = plans or PlanCache()
    return [evaluate_plan(plans.plan(ex, program), store).probability for ex in queries]
