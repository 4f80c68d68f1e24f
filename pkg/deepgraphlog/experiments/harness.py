"""
Shared plumbing for the experiment modules: seed streams, instance
programs, training of one variant and scoring.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from logging_setup import Component, get_logger

from ..frontend.parser import parse_atom
from ..frontend.printer import format_program
from ..frontend.program import Program
from ..frontend.validate import load_program
from ..logic.terms import Atom
from ..training.data import TrainingExample
from ..training.store import ParamStore
from ..training.trainer import PlanCache, TrainOptions, TrainReport, fit, predict
from .spec import DatasetSpec

logger = get_logger(Component.EXPERIMENTS)


def seed_streams(seed: int, count: int) -> List[np.random.Generator]:
    """Independent generators spawned from one root seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def draw_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def model_directives(spec: DatasetSpec, *model_ids: str) -> str:
    layers, hidden = spec.training["layers"], spec.training["hidden"]
    return "\n".join(f"#model({m}, layers={layers}, hidden={hidden})." for m in model_ids)


@dataclass
class Instance:
    """One generated program together with its supervision."""

    instance_id: str
    program: Program
    examples: List[TrainingExample] = field(default_factory=list)

    @classmethod
    def from_source(cls, instance_id: str, source: str) -> "Instance":
        return cls(instance_id, load_program(source, f"{instance_id}.dgl"))

    def supervise(self, query: Atom | str, target: float) -> None:
        atom = parse_atom(query) if isinstance(query, str) else query
        self.examples.append(TrainingExample(atom, float(target), program=self.program))


@dataclass
class Variant:
    """Train and test instances of one program family (e.g. the plain GNN baseline)."""

    name: str
    train: List[Instance]
    test: List[Instance]

    def training_examples(self) -> List[TrainingExample]:
        return [ex for inst in self.train for ex in inst.examples]


def train_variant(
    variant: Variant,
    spec: DatasetSpec,
    seed: int,
    run_id: str,
) -> tuple[ParamStore, TrainReport]:
    examples = variant.training_examples()
    options = TrainOptions(
        epochs=int(spec.training["epochs"]),
        learning_rate=float(spec.training["learning_rate"]),
        seed=seed,
        optimizer=str(spec.training["optimizer"]),
        batch_size=spec.training.get("batch_size"),
        fact_penalty=float(spec.training.get("fact_penalty") or 0.0),
        run_id=f"{run_id}/{variant.name}",
    )
    store, report = fit(examples, variant.train[0].program, options=options)
    logger.info(
        "variant trained",
        run_id=run_id,
        variant=variant.name,
        examples=len(examples),
        final_loss=report.final_loss,
    )
    return store, report


def probabilities(
    instance: Instance,
    queries: Sequence[str],
    store: ParamStore,
    plans: Optional[PlanCache] = None,
) -> Dict[str, float]:
    """Marginals of ``queries`` in the instance program under ``store``."""
    examples = [TrainingExample(parse_atom(q), 0.0, program=instance.program) for q in queries]
    return dict(zip(queries, predict(examples, instance.program, store, plans)))


def argmax_label(scores: Mapping[str, float], labels: Sequence[str]) -> str:
    """Highest-scoring label; ties go to the earlier label."""
    best = labels[0]
    for label in labels[1:]:
        if scores[label] > scores[best]:
            best = label
    return best


def write_programs(directory: Path, variants: Sequence[Variant]) -> None:
    """First training program of each variant as ``<variant>.dgl``."""
    directory.mkdir(parents=True, exist_ok=True)
    for variant in variants:
        if variant.train:
            path = directory / f"{variant.name}.dgl"
            path.write_text(format_program(variant.train[0].program), encoding="utf-8")
