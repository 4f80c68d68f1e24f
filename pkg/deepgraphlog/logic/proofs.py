"""
Relevant-fact extraction by tabled backward chaining over the ground program.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set

from .grounding import ForwardChainer, ground_program
from .terms import Atom, AtomUniverse, Rule


@dataclass(frozen=True)
class RelevantFacts:
    facts: frozenset
    provable: bool

    def __iter__(self):
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, item: object) -> bool:
        return item in self.facts


class ProofSupport:
    """
    Ground rules indexed for repeated support queries against one set of base facts.

    Only rule instances whose whole body is derivable when every base fact
    holds are followed, and every goal is expanded at most once, so recursive
    programs terminate. The support may over-approximate the facts used by
    minimal proofs through cyclic rules; facts outside it never affect the goal.
    """

    def __init__(self, rules: Sequence[Rule], base_facts: Iterable[Atom]):
        self.base = frozenset(base_facts)
        self.possible = ForwardChainer(rules).closure(self.base)
        self._by_head: Dict[Atom, List[Rule]] = defaultdict(list)
        for rule in rules:
            if all(b in self.possible for b in rule.body):
                self._by_head[rule.head].append(rule)

    def support(self, goals: Iterable[Atom]) -> Set[Atom]:
        found: Set[Atom] = set()
        visited: Set[Atom] = set()
        stack = [g for g in goals if g in self.possible]
        visited.update(stack)
        while stack:
            goal = stack.pop()
            if goal in self.base:
                found.add(goal)
            for rule in self._by_head.get(goal, ()):
                for sub in rule.body:
                    if sub not in visited:
                        visited.add(sub)
                        stack.append(sub)
        return found


def relevant_facts(query: Atom, rules: Sequence[Rule], base_facts: Iterable[Atom]) -> RelevantFacts:
    """Base facts occurring in some proof of ``query`` when every base fact holds."""
    if not query.is_ground():
        raise ValueError(f"query {query} is not ground")

    base = frozenset(base_facts)
    if not all(r.is_ground() for r in rules):
        rules = ground_program(rules, AtomUniverse.from_atoms(base))

    index = ProofSupport(rules, base)
    if query not in index.possible:
        return RelevantFacts(frozenset(), provable=False)
    return RelevantFacts(frozenset(index.support([query])), provable=True)
