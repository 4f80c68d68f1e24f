"""
Evaluation order of ground graph neural facts.
"""
from __future__ import annotations

from typing import Dict, List, Sequence

import networkx as nx

from ..errors import StratificationError
from ..logic.terms import Rule
from .ground import GroundGnnFact


def _derivation_graph(rules: Sequence[Rule]) -> nx.DiGraph:
    graph = nx.DiGraph()
    for rule in rules:
        graph.add_node(rule.head)
        for b in rule.body:
            graph.add_edge(b, rule.head)
    return graph


def stratify(facts: Sequence[GroundGnnFact], rules: Sequence[Rule]) -> List[GroundGnnFact]:
    """
    Topological order of ``facts``: ``f`` comes after ``g`` when some γ atom
    of ``f`` is a head of ``g`` or derivable from one through the ground
    ``rules``. Ties keep input order.
    """
    derivations = _derivation_graph(rules)
    reach: Dict[int, set] = {i: _downstream(g, derivations) for i, g in enumerate(facts)}

    order = nx.DiGraph()
    order.add_nodes_from(range(len(facts)))
    for i, f in enumerate(facts):
        gamma = set(f.gamma)
        for j in range(len(facts)):
            if gamma & reach[j]:
                order.add_edge(j, i)

    try:
        ranked = list(nx.lexicographical_topological_sort(order))
    except nx.NetworkXUnfeasible:
        cycle = nx.find_cycle(order)
        names = [str(facts[u].head_group[0]) for u, _ in cycle]
        raise StratificationError(names + names[:1]) from None
    return [facts[i] for i in ranked]


def _downstream(g: GroundGnnFact, derivations: nx.DiGraph) -> set:
    reached = set(g.head_group)
    for head in g.head_group:
        if head in derivations:
            reached |= nx.descendants(derivations, head)
    return reached


def depends_on(f: GroundGnnFact, g: GroundGnnFact, rules: Sequence[Rule]) -> bool:
    return bool(set(f.gamma) & _downstream(g, _derivation_graph(rules)))
