"""
Graph classification by 4-cycle / triangle structure.

Three program families share one softmax classifier over the graph:
logic at the top (a rule decides class_0 from a detector fact), logic at
the bottom (an extra vertex carries structure indicators into the
network's input) and the plain network.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..training.trainer import PlanCache
from .graphs import CLASSES, GraphInstance, balanced_graphs, directed_edges, has_four_cycle, has_triangle, six_cycle, wl_pair
from .harness import Instance, Variant, argmax_label, draw_seed, model_directives, probabilities, seed_streams, train_variant
from .metrics import MetricReport, multiclass_accuracy
from .spec import DatasetSpec

MODEL = "m_class"
HEADS = "; ".join(f"gnn_class({c})" for c in CLASSES)
AUGMENTED_VERTEX = "g"


def vertex(i: int) -> str:
    return f"v{i}"


def _edge_facts(g: GraphInstance) -> List[str]:
    return [f"edge({vertex(u)},{vertex(v)})." for u, v in directed_edges(g)]


def top_program(g: GraphInstance, spec: DatasetSpec) -> str:
    lines = [model_directives(spec, MODEL), *_edge_facts(g)]
    if has_four_cycle(g):
        lines.append("cycle_4.")
    lines += [
        f"gnn({MODEL},[edge/2])::{HEADS}.",
        "class(class_0) :- cycle_4.",
        "class(C) :- gnn_class(C).",
    ]
    return "\n".join(lines) + "\n"


def bottom_program(g: GraphInstance, spec: DatasetSpec) -> str:
    """The graph plus vertex ``g`` joined to every vertex and labelled with structure indicators."""
    lines = [model_directives(spec, MODEL), *_edge_facts(g), f"feature({AUGMENTED_VERTEX})."]
    for i in range(g.num_vertices):
        lines.append(f"edge({AUGMENTED_VERTEX},{vertex(i)}).")
        lines.append(f"edge({vertex(i)},{AUGMENTED_VERTEX}).")
    if has_four_cycle(g):
        lines.append(f"has_cycle_4({AUGMENTED_VERTEX}).")
    if has_triangle(g):
        lines.append(f"has_triangle({AUGMENTED_VERTEX}).")
    lines += [
        f"gnn({MODEL},[edge/2,feature/1,has_cycle_4/1,has_triangle/1])::{HEADS}.",
        "class(C) :- gnn_class(C).",
    ]
    return "\n".join(lines) + "\n"


def plain_program(g: GraphInstance, spec: DatasetSpec) -> str:
    lines = [model_directives(spec, MODEL), *_edge_facts(g)]
    lines += [f"gnn({MODEL},[edge/2])::{HEADS}.", "class(C) :- gnn_class(C)."]
    return "\n".join(lines) + "\n"


PROGRAMS = {"top": top_program, "bottom": bottom_program, "gnn": plain_program}


@dataclass
class E1Dataset:
    train: List[GraphInstance]
    test: List[GraphInstance]
    variants: List[Variant]


def _instance(kind: str, g: GraphInstance, spec: DatasetSpec) -> Instance:
    inst = Instance.from_source(f"{kind}-{g.instance_id}", PROGRAMS[kind](g, spec))
    inst.supervise(f"class({g.label})", 1.0)
    return inst


def gen_e1(spec: DatasetSpec, rng: Optional[np.random.Generator] = None) -> E1Dataset:
    rng = rng if rng is not None else seed_streams(spec.seed, 1)[0]
    options = {
        "min_vertices": int(spec.param("min_vertices", 6)),
        "max_vertices": int(spec.param("max_vertices", 10)),
    }
    train = balanced_graphs("train", spec.size["train"], rng, **options)
    test = balanced_graphs("test", spec.size["test"], rng, **options)
    if spec.param("include_fixed", True):
        test += [*wl_pair(), six_cycle()]
    variants = [
        Variant(kind, [_instance(kind, g, spec) for g in train], [_instance(kind, g, spec) for g in test])
        for kind in PROGRAMS
    ]
    return E1Dataset(train, test, variants)


def class_scores(instance: Instance, store, plans: Optional[PlanCache] = None) -> dict:
    probs = probabilities(instance, [f"class({c})" for c in CLASSES], store, plans)
    return {c: probs[f"class({c})"] for c in CLASSES}


def run(spec: DatasetSpec, run_id: str) -> tuple[MetricReport, List[Variant]]:
    data_rng, train_rng = seed_streams(spec.seed, 2)
    data = gen_e1(spec, data_rng)
    train_seed = draw_seed(train_rng)
    report = MetricReport()
    fixed = {g.instance_id: i for i, g in enumerate(data.test)}

    for variant in data.variants:
        store, trained = train_variant(variant, spec, train_seed, run_id)
        plans = PlanCache()
        scores = [class_scores(inst, store, plans) for inst in variant.test]
        predicted = [argmax_label(s, CLASSES) for s in scores]
        report.update(
            {
                "accuracy": multiclass_accuracy(predicted, [g.label for g in data.test]),
                "final_loss": trained.final_loss,
            },
            prefix=f"{variant.name}/",
        )
        if "wl-ladder" in fixed and "wl-triangles" in fixed:
            gap = scores[fixed["wl-ladder"]]["class_0"] - scores[fixed["wl-triangles"]]["class_0"]
            report.update({"wl_pair_gap": gap}, prefix=f"{variant.name}/")
    return report, data.variants
