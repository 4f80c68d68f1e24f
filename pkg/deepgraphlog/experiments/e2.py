"""
Structure learning: learnable facts rF(template, class) decide which
detected template implies which class, next to a softmax classifier.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..training.trainer import PlanCache
from .graphs import CLASSES, TEMPLATES, GraphInstance, balanced_graphs, directed_edges
from .harness import Instance, Variant, argmax_label, draw_seed, model_directives, probabilities, seed_streams, train_variant
from .metrics import MetricReport, multiclass_accuracy
from .spec import DatasetSpec

MODEL = "m_cls"
HEADS = "; ".join(f"gnn_classifier({c})" for c in CLASSES)
# the rules behind the labels: a 4-cycle makes class_0, a triangle (without one) class_1
RELEVANT = frozenset({("cycle_4", "class_0"), ("cycle_3", "class_1")})


def relevance_atom(template: str, cls: str) -> str:
    return f"rF({template},{cls})"


def _shared(g: GraphInstance, spec: DatasetSpec) -> List[str]:
    lines = [model_directives(spec, MODEL)]
    lines += [f"edge(v{u},v{v})." for u, v in directed_edges(g)]
    lines += [f"has({t})." for t in g.templates]
    lines += [f"gnn({MODEL},[edge/2])::{HEADS}.", "classify(C) :- gnn_classifier(C)."]
    return lines


def learned_program(g: GraphInstance, spec: DatasetSpec) -> str:
    lines = _shared(g, spec)
    initial = float(spec.param("initial_relevance", 0.5))
    lines += [f"t({initial!r})::{relevance_atom(t, c)}." for t in TEMPLATES for c in CLASSES]
    lines.append("classify(C) :- has(T), rF(T,C).")
    return "\n".join(lines) + "\n"


def given_program(g: GraphInstance, spec: DatasetSpec) -> str:
    return "\n".join(_shared(g, spec) + ["classify(class_0) :- has(cycle_4)."]) + "\n"


def plain_program(g: GraphInstance, spec: DatasetSpec) -> str:
    return "\n".join(_shared(g, spec)) + "\n"


PROGRAMS = {"learned": learned_program, "given": given_program, "gnn": plain_program}


@dataclass
class E2Dataset:
    train: List[GraphInstance]
    test: List[GraphInstance]
    variants: List[Variant]


def _instance(kind: str, g: GraphInstance, spec: DatasetSpec) -> Instance:
    inst = Instance.from_source(f"{kind}-{g.instance_id}", PROGRAMS[kind](g, spec))
    for c in CLASSES:
        inst.supervise(f"classify({c})", 1.0 if c == g.label else 0.0)
    return inst


def gen_e2(spec: DatasetSpec, rng: Optional[np.random.Generator] = None) -> E2Dataset:
    rng = rng if rng is not None else seed_streams(spec.seed, 1)[0]
    options = {
        "min_vertices": int(spec.param("min_vertices", 6)),
        "max_vertices": int(spec.param("max_vertices", 10)),
        "extra_triangle": bool(spec.param("extra_triangle", False)),
        "clique_rate": float(spec.param("clique_rate", 0.0)),
    }
    train = balanced_graphs("train", spec.size["train"], rng, **options)
    test = balanced_graphs("test", spec.size["test"], rng, **options)
    variants = [
        Variant(kind, [_instance(kind, g, spec) for g in train], [_instance(kind, g, spec) for g in test])
        for kind in PROGRAMS
    ]
    return E2Dataset(train, test, variants)


def run(spec: DatasetSpec, run_id: str) -> tuple[MetricReport, List[Variant]]:
    data_rng, train_rng = seed_streams(spec.seed, 2)
    data = gen_e2(spec, data_rng)
    train_seed = draw_seed(train_rng)
    report = MetricReport()

    for variant in data.variants:
        store, trained = train_variant(variant, spec, train_seed, run_id)
        plans = PlanCache()
        predicted = []
        for inst in variant.test:
            probs = probabilities(inst, [f"classify({c})" for c in CLASSES], store, plans)
            scores: Dict[str, float] = {c: probs[f"classify({c})"] for c in CLASSES}
            predicted.append(argmax_label(scores, CLASSES))
        report.update(
            {
                "accuracy": multiclass_accuracy(predicted, [g.label for g in data.test]),
                "final_loss": trained.final_loss,
            },
            prefix=f"{variant.name}/",
        )
        if variant.name == "learned":
            probs = trained.fact_probabilities
            irrelevant = [probs[relevance_atom(t, c)] for t in TEMPLATES for c in CLASSES if (t, c) not in RELEVANT]
            report.update(probs, prefix="learned/prob/")
            report.update({"irrelevant_max": max(irrelevant)}, prefix="learned/")
    return report, data.variants
