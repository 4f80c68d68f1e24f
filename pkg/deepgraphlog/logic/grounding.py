"""
Bottom-up grounding and least-model computation for definite programs.
"""
from __future__ import annotations

from collections import defaultdict
from itertools import product
from typing import Dict, Iterable, Iterator, List, Sequence, Set, Tuple

from logging_setup import Component, get_logger

from .terms import Atom, AtomUniverse, Rule, Term, Constant
from .unify import apply_subst, match, standardize_apart

logger = get_logger(Component.LOGIC)


class AtomIndex:
    """Ground atoms indexed by predicate indicator, in insertion order."""

    def __init__(self, atoms: Iterable[Atom] = ()):
        self._by_indicator: Dict[Tuple[str, int], List[Atom]] = defaultdict(list)
        self._members: Set[Atom] = set()
        for a in atoms:
            self.add(a)

    def add(self, a: Atom) -> bool:
        if a in self._members:
            return False
        self._members.add(a)
        self._by_indicator[a.indicator].append(a)
        return True

    def candidates(self, indicator: Tuple[str, int]) -> List[Atom]:
        return self._by_indicator.get(indicator, [])

    def __contains__(self, a: object) -> bool:
        return a in self._members

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._members)

    def __len__(self) -> int:
        return len(self._members)


def solve_conjunction(
    body: Sequence[Atom],
    index: AtomIndex,
    theta: Dict[str, Term] | None = None,
) -> Iterator[Dict[str, Term]]:
    """Every substitution making all of ``body`` members of ``index`` (left-to-right join)."""
    if not body:
        yield dict(theta or {})
        return
    first, rest = body[0], body[1:]
    current = apply_subst(first, theta) if theta else first
    if current.is_ground():
        if current in index:
            yield from solve_conjunction(rest, index, theta)
        return
    # snapshot: the index may grow while the caller consumes solutions
    for candidate in list(index.candidates(current.indicator)):
        extended = match(current, candidate, theta)
        if extended is not None:
            yield from solve_conjunction(rest, index, extended)


def _ground_remaining(rule: Rule, theta: Dict[str, Term], constants: Sequence[str]) -> Iterator[Dict[str, Term]]:
    free = sorted({v for v in rule.variables() if v not in theta})
    if not free:
        yield theta
        return
    for values in product(constants, repeat=len(free)):
        extended = dict(theta)
        extended.update({name: Constant(value) for name, value in zip(free, values)})
        yield extended


def ground_program(rules: Sequence[Rule], universe: AtomUniverse) -> List[Rule]:
    """
    Every ground instance of ``rules`` whose body atoms lie in the closure of
    ``universe`` under the rules.

    Variables that only occur in the head range over the universe constants.
    """
    index = AtomIndex(sorted(universe.atoms, key=str))
    constants = set(universe.constants)
    renamed = [standardize_apart(rule, i) for i, rule in enumerate(rules)]
    ground: Dict[Rule, None] = {}

    changed = True
    passes = 0
    while changed:
        changed = False
        passes += 1
        ordered_constants = sorted(constants)
        for rule in renamed:
            for theta in list(solve_conjunction(rule.body, index)):
                for full in _ground_remaining(rule, theta, ordered_constants):
                    head = apply_subst(rule.head, full)
                    instance = Rule(head, tuple(apply_subst(b, full) for b in rule.body))
                    if instance not in ground:
                        ground[instance] = None
                    if index.add(head):
                        constants.update(head.constants())
                        changed = True

    logger.debug("program grounded", rules=len(rules), ground_rules=len(ground), passes=passes)
    return list(ground)


class ForwardChainer:
    """
    Ground definite rules compiled for repeated least-model computation.

    Each rule fires once all its distinct body atoms are derived; the closure
    is linear in the size of the ground program.
    """

    def __init__(self, ground_rules: Iterable[Rule]):
        self.atom_ids: Dict[Atom, int] = {}
        self.atoms: List[Atom] = []
        self._heads: List[int] = []
        self._body_sizes: List[int] = []
        self._watchers: Dict[int, List[int]] = defaultdict(list)
        self._unconditional: List[int] = []

        for rule in ground_rules:
            if not rule.is_ground():
                raise ValueError(f"rule {rule} is not ground")
            rule_id = len(self._heads)
            self._heads.append(self.intern(rule.head))
            body = sorted({self.intern(b) for b in rule.body})
            self._body_sizes.append(len(body))
            if not body:
                self._unconditional.append(rule_id)
            for atom_id in body:
                self._watchers[atom_id].append(rule_id)

    def intern(self, a: Atom) -> int:
        atom_id = self.atom_ids.get(a)
        if atom_id is None:
            atom_id = len(self.atoms)
            self.atom_ids[a] = atom_id
            self.atoms.append(a)
        return atom_id

    def closure_ids(self, true_ids: Iterable[int]) -> Set[int]:
        """Least model over interned atom ids."""
        remaining = list(self._body_sizes)
        model: Set[int] = set()
        queue: List[int] = []
        for atom_id in true_ids:
            if atom_id not in model:
                model.add(atom_id)
                queue.append(atom_id)
        for rule_id in self._unconditional:
            head = self._heads[rule_id]
            if head not in model:
                model.add(head)
                queue.append(head)
        watchers = self._watchers
        heads = self._heads
        while queue:
            atom_id = queue.pop()
            for rule_id in watchers.get(atom_id, ()):
                remaining[rule_id] -= 1
                if remaining[rule_id] == 0:
                    head = heads[rule_id]
                    if head not in model:
                        model.add(head)
                        queue.append(head)
        return model

    def closure(self, facts: Iterable[Atom]) -> Set[Atom]:
        ids = []
        extra: Set[Atom] = set()
        for a in facts:
            atom_id = self.atom_ids.get(a)
            if atom_id is None:
                extra.add(a)
            else:
                ids.append(atom_id)
        return {self.atoms[i] for i in self.closure_ids(ids)} | extra


def minimal_model(facts: Iterable[Atom], ground_rules: Iterable[Rule]) -> frozenset:
    """Least fixpoint of forward chaining from ``facts`` under ``ground_rules``."""
    return frozenset(ForwardChainer(ground_rules).closure(facts))
