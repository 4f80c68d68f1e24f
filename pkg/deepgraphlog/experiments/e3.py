"""
Distant supervision on family trees: fatherOf and motherOf are graph
neural facts that only ever receive a training signal through the
grandfatherOf rules. The baseline trains one network on grandfatherOf
directly and is then asked about parent pairs.

By default the two relations share one network whose softmax picks
exactly one of them per parent pair. With ``exclusive_parents: false``
each relation gets its own sigmoid network.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..gnn.graph import LabelledGraph
from ..gnn.network import forward
from ..training.store import ParamStore
from .harness import Instance, Variant, draw_seed, model_directives, seed_streams, train_variant
from .metrics import MetricReport, RankingGroup, evaluate
from .spec import DatasetSpec

FATHER_MODEL = "gcn_fOf"
MOTHER_MODEL = "gcn_mOf"
BASELINE_MODEL = "gcn_gfOf"
PARENT_MODEL = "gcn_parent"
GAMMA = "[m/1,f/1,pOf/2]"

Pair = Tuple[str, str]
Scorer = Callable[[LabelledGraph, Pair], float]


@dataclass(frozen=True)
class Family:
    family_id: str
    persons: Tuple[str, ...]
    male: FrozenSet[str]
    parent_of: Tuple[Pair, ...]

    def is_male(self, person: str) -> bool:
        return person in self.male

    def children(self, person: str) -> List[str]:
        return [c for p, c in self.parent_of if p == person]

    def father_of(self) -> Set[Pair]:
        return {(p, c) for p, c in self.parent_of if self.is_male(p)}

    def mother_of(self) -> Set[Pair]:
        return {(p, c) for p, c in self.parent_of if not self.is_male(p)}

    def grandparent_of(self) -> Set[Pair]:
        return {(p, g) for p, c in self.parent_of for g in self.children(c)}

    def grandfather_of(self) -> Set[Pair]:
        return {(p, g) for p, g in self.grandparent_of() if self.is_male(p)}

    def graph(self) -> LabelledGraph:
        labels = {p: {"m" if self.is_male(p) else "f"} for p in self.persons}
        return LabelledGraph.build(self.persons, labels, [(p, "pOf", c) for p, c in self.parent_of])


def random_family(
    family_id: str,
    rng: np.random.Generator,
    depth: int = 3,
    max_children: int = 2,
    max_persons: Optional[int] = None,
) -> Family:
    """
    A tree with up to ``depth`` generations. Every person above the last
    generation has 1..max_children children until ``max_persons`` is reached.
    """
    persons = ["p0"]
    parent_of: List[Pair] = []
    generation = ["p0"]
    for _ in range(depth - 1):
        following = []
        for parent in generation:
            for _ in range(int(rng.integers(1, max_children + 1))):
                if max_persons is not None and len(persons) >= max_persons:
                    break
                child = f"p{len(persons)}"
                persons.append(child)
                parent_of.append((parent, child))
                following.append(child)
        generation = following
    male = frozenset(p for p in persons if rng.random() < 0.5)
    return Family(family_id, tuple(persons), male, tuple(parent_of))


def _facts(family: Family) -> List[str]:
    lines = [f"{'m' if family.is_male(p) else 'f'}({p})." for p in family.persons]
    lines += [f"pOf({p},{c})." for p, c in family.parent_of]
    return lines


def exclusive_parents(spec: DatasetSpec) -> bool:
    return bool(spec.param("exclusive_parents", True))


def rules_program(family: Family, spec: DatasetSpec) -> str:
    if exclusive_parents(spec):
        lines = [model_directives(spec, PARENT_MODEL), *_facts(family)]
        lines.append(f"gnn({PARENT_MODEL},{GAMMA},[X,Y])::fatherOf(X,Y); motherOf(X,Y) :- pOf(X,Y).")
    else:
        lines = [model_directives(spec, FATHER_MODEL, MOTHER_MODEL), *_facts(family)]
        lines += [
            f"gnn({FATHER_MODEL},{GAMMA},[X,Y])::fatherOf(X,Y) :- pOf(X,Y).",
            f"gnn({MOTHER_MODEL},{GAMMA},[X,Y])::motherOf(X,Y) :- pOf(X,Y).",
        ]
    lines += [
        "grandfatherOf(X,Y) :- fatherOf(X,Z), fatherOf(Z,Y).",
        "grandfatherOf(X,Y) :- fatherOf(X,Z), motherOf(Z,Y).",
    ]
    return "\n".join(lines) + "\n"


def baseline_program(family: Family, pairs: Sequence[Pair], spec: DatasetSpec) -> str:
    lines = [model_directives(spec, BASELINE_MODEL), *_facts(family)]
    lines += [f"cand({x},{y})." for x, y in pairs]
    lines.append(f"gnn({BASELINE_MODEL},{GAMMA},[X,Y])::grandfatherOf(X,Y) :- cand(X,Y).")
    return "\n".join(lines) + "\n"


def sample_pairs(family: Family, rng: np.random.Generator) -> List[Tuple[Pair, float]]:
    """
    Every grandfather pair as a positive plus as many negatives (at least
    one), drawn uniformly from grandmother pairs first and then from the
    remaining non-grandfather pairs.
    """
    positives = sorted(family.grandfather_of())
    grandfathers = set(positives)
    hard = sorted(family.grandparent_of() - grandfathers)
    easy = sorted(
        (x, y) for x in family.persons for y in family.persons if x != y and (x, y) not in grandfathers and (x, y) not in hard
    )
    wanted = max(1, len(positives))
    negatives: List[Pair] = []
    for pool in (hard, easy):
        take = min(wanted - len(negatives), len(pool))
        if take > 0:
            picked = rng.choice(len(pool), size=take, replace=False)
            negatives += [pool[int(i)] for i in sorted(picked)]
    return [(p, 1.0) for p in positives] + [(n, 0.0) for n in negatives]


@dataclass
class E3Dataset:
    train: List[Family]
    test: List[Family]
    variants: List[Variant]


def gen_e3(spec: DatasetSpec, rng: Optional[np.random.Generator] = None) -> E3Dataset:
    rng = rng if rng is not None else seed_streams(spec.seed, 1)[0]
    shape = {
        "depth": int(spec.param("depth", 3)),
        "max_children": int(spec.param("max_children", 2)),
        "max_persons": int(spec.param("max_persons")) if spec.param("max_persons") is not None else None,
    }
    train = [random_family(f"train-{i}", rng, **shape) for i in range(spec.size["train"])]
    test = [random_family(f"test-{i}", rng, **shape) for i in range(spec.size["test"])]

    rules_train, baseline_train = [], []
    for family in train:
        labelled = sample_pairs(family, rng)
        with_rules = Instance.from_source(f"rules-{family.family_id}", rules_program(family, spec))
        baseline = Instance.from_source(
            f"baseline-{family.family_id}", baseline_program(family, [p for p, _ in labelled], spec)
        )
        for (x, y), target in labelled:
            with_rules.supervise(f"grandfatherOf({x},{y})", target)
            baseline.supervise(f"grandfatherOf({x},{y})", target)
        rules_train.append(with_rules)
        baseline_train.append(baseline)

    rules_test = [Instance.from_source(f"rules-{f.family_id}", rules_program(f, spec)) for f in test]
    baseline_test = [
        Instance.from_source(f"baseline-{f.family_id}", baseline_program(f, f.parent_of, spec)) for f in test
    ]
    variants = [Variant("dgl", rules_train, rules_test), Variant("gnn", baseline_train, baseline_test)]
    return E3Dataset(train, test, variants)


def _scorer(store: ParamStore, instance: Instance, model_id: str, head: Optional[int] = None) -> Scorer:
    """Network score of a pair; ``head`` picks one entry of a softmax output."""
    cfg = instance.program.model_configs[model_id]
    params = store.model(model_id)

    def score(graph: LabelledGraph, pair: Pair) -> float:
        value, _ = forward(cfg, params, graph, pair)
        return float(value if head is None else value[head])

    return score


def relation_metrics(
    families: Sequence[Family],
    score: Scorer,
    truth_of,
    ks: Sequence[int],
) -> Dict[str, float]:
    """
    Scores every parent pair of every family for one relation. Hits@K ranks
    each true pair against the pool of all parent pairs, across families,
    that do not hold the relation.
    """
    scores: List[float] = []
    truth: List[int] = []
    for family in families:
        graph = family.graph()
        positives = truth_of(family)
        for pair in family.parent_of:
            scores.append(score(graph, pair))
            truth.append(int(pair in positives))
    pool = [s for s, t in zip(scores, truth) if not t]
    ranking: List[RankingGroup] = [(s, pool) for s, t in zip(scores, truth) if t]
    return evaluate(scores, truth, ks, ranking if ranking and pool else None)


def _relation_scorers(variant: Variant, spec: DatasetSpec, store: ParamStore) -> Dict[str, Scorer]:
    reference = variant.test[0] if variant.test else variant.train[0]
    if variant.name != "dgl":
        scorer = _scorer(store, reference, BASELINE_MODEL)
        return {"fatherOf": scorer, "motherOf": scorer}
    if exclusive_parents(spec):
        # head order follows the group: fatherOf; motherOf
        return {"fatherOf": _scorer(store, reference, PARENT_MODEL, 0), "motherOf": _scorer(store, reference, PARENT_MODEL, 1)}
    return {"fatherOf": _scorer(store, reference, FATHER_MODEL), "motherOf": _scorer(store, reference, MOTHER_MODEL)}


def run(spec: DatasetSpec, run_id: str) -> tuple[MetricReport, List[Variant]]:
    data_rng, train_rng = seed_streams(spec.seed, 2)
    data = gen_e3(spec, data_rng)
    train_seed = draw_seed(train_rng)
    ks = [int(k) for k in spec.param("ks", [5, 20])]
    report = MetricReport()
    relations = {"fatherOf": Family.father_of, "motherOf": Family.mother_of}

    for variant in data.variants:
        store, trained = train_variant(variant, spec, train_seed, run_id)
        report.update({"final_loss": trained.final_loss}, prefix=f"{variant.name}/")
        scorers = _relation_scorers(variant, spec, store)
        for relation, truth_of in relations.items():
            metrics = relation_metrics(data.test, scorers[relation], truth_of, ks)
            report.update(metrics, prefix=f"{variant.name}/{relation}/")
    return report, data.variants
