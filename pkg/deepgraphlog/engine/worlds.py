"""
Possible worlds: truth assignments, induced graphs and world weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Dict, Iterable, Mapping, Optional

from scipy.special import expit

from ..frontend.program import ProbFact, Program
from ..gnn.graph import LabelledGraph
from ..logic.terms import Atom
from .ground import GroundGnnFact, ground, vertex_name


def fact_probability(fact: ProbFact, fact_logits: Optional[Mapping[str, float]] = None) -> float:
    """Annotated probability, or logistic(logit) for a learnable fact with a stored logit."""
    if fact.learnable and fact_logits is not None and fact.param_id in fact_logits:
        return float(expit(fact_logits[fact.param_id]))
    return fact.prob


@dataclass(frozen=True)
class WorldAssignment:
    """Truth values of base facts; base facts absent from ``truth`` are not under consideration."""

    truth: Mapping[Atom, bool]

    @classmethod
    def from_true(cls, true_atoms: Iterable[Atom], domain: Iterable[Atom]) -> "WorldAssignment":
        chosen = set(true_atoms)
        return cls({a: a in chosen for a in domain})

    def true_atoms(self) -> frozenset:
        return frozenset(a for a, v in self.truth.items() if v)

    def __getitem__(self, atom: Atom) -> bool:
        return self.truth[atom]


def induced_graph(fact: GroundGnnFact, world: WorldAssignment, model_of_w: Collection[Atom]) -> LabelledGraph:
    """
    γ restricted to the atoms true in ``model_of_w`` over the fixed vertex
    set ``fact.node_set``. ``world`` is accepted for symmetry with the
    world semantics; only its minimal model matters.
    """
    labels: Dict[str, set] = {v: set() for v in fact.node_set}
    edges = []
    for a in fact.gamma:
        if a not in model_of_w:
            continue
        if a.arity == 1:
            labels[vertex_name(a.args[0])].add(a.predicate)
        elif a.arity == 2:
            edges.append((vertex_name(a.args[0]), a.predicate, vertex_name(a.args[1])))
    return LabelledGraph.build(fact.node_set, labels, edges)


def world_probability(
    world: WorldAssignment,
    program: Program,
    gnn_eval: Mapping[Atom, float],
    fact_logits: Optional[Mapping[str, float]] = None,
) -> float:
    """
    Product over the world's base facts of P(f | G_f) for true facts and
    1 - P(f | G_f) for false ones. A softmax head group contributes the
    probability of its single true head, or 0 when not exactly one head is true.
    """
    facts = {f.atom: f for f in program.prob_facts}
    owner = ground(program).head_owner()
    weight = 1.0
    seen_groups = set()
    for atom, value in world.truth.items():
        fact = facts.get(atom)
        if fact is not None:
            p = fact_probability(fact, fact_logits)
            weight *= p if value else 1.0 - p
            continue
        group = owner.get(atom)
        if group is None:
            raise KeyError(f"{atom} is not a base fact of the program")
        if not group.is_softmax:
            p = gnn_eval[atom]
            weight *= p if value else 1.0 - p
        elif group.head_group not in seen_groups:
            seen_groups.add(group.head_group)
            true_heads = [h for h in group.head_group if world.truth.get(h, False)]
            weight *= gnn_eval[true_heads[0]] if len(true_heads) == 1 else 0.0
    return weight
