"""
Grounding of graph neural fact schemas against the possible-atom universe.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Sequence, Set, Tuple

from logging_setup import Component, get_logger

from ..errors import ErrorCategory, ProgramError, StratificationError
from ..frontend.program import GammaIndicator, GnnFactSchema, Program
from ..logic.grounding import AtomIndex, ground_program, minimal_model, solve_conjunction
from ..logic.terms import Atom, AtomUniverse, Constant, Rule, Term, term_variables
from ..logic.unify import apply_subst, match

logger = get_logger(Component.ENGINE)


def vertex_name(term: Term) -> str:
    return term.symbol if isinstance(term, Constant) else str(term)


@dataclass(frozen=True)
class GroundGnnFact:
    """One grounded ``gnn(m, γ, targets) :: h1; ...; hk`` instance."""

    model_id: str
    gamma: Tuple[Atom, ...]
    node_set: Tuple[str, ...]
    targets: Tuple[str, ...]
    head_group: Tuple[Atom, ...]
    schema_index: int = 0

    @property
    def is_softmax(self) -> bool:
        return len(self.head_group) > 1

    def __str__(self) -> str:
        heads = "; ".join(str(h) for h in self.head_group)
        return f"gnn({self.model_id},[{','.join(self.targets)}])::{heads}"


def _ground_gamma(schema: GnnFactSchema, theta: Dict[str, Term], universe: AtomUniverse) -> List[Atom]:
    gamma: Dict[Atom, None] = {}
    for item in schema.gamma_spec:
        if isinstance(item, GammaIndicator):
            for a in universe.by_indicator(item.predicate, item.arity):
                gamma[a] = None
            continue
        instance = apply_subst(item, theta)
        if instance.is_ground():
            gamma[instance] = None
        else:
            for a in universe.by_indicator(*instance.indicator):
                if match(instance, a) is not None:
                    gamma[a] = None
    return sorted(gamma, key=str)


def _expand_schema(index: int, schema: GnnFactSchema, atoms: AtomIndex, universe: AtomUniverse) -> List[GroundGnnFact]:
    thetas = list(solve_conjunction(schema.guard, atoms)) if schema.guard else [{}]
    facts = []
    for theta in thetas:
        gamma = _ground_gamma(schema, theta, universe)
        gamma_vertices = sorted({vertex_name(arg) for a in gamma for arg in a.args})
        free = sorted({v for t in schema.targets for v in term_variables(apply_subst(t, theta))})
        # target variables left open by the guard range over the γ vertices
        for values in product(gamma_vertices, repeat=len(free)):
            full = dict(theta)
            full.update({name: Constant(value) for name, value in zip(free, values)})
            targets = tuple(vertex_name(apply_subst(t, full)) for t in schema.targets)
            heads = tuple(apply_subst(h, full) for h in schema.head_group)
            facts.append(
                GroundGnnFact(
                    model_id=schema.model_id,
                    gamma=tuple(gamma),
                    node_set=tuple(sorted(set(gamma_vertices) | set(targets))),
                    targets=targets,
                    head_group=heads,
                    schema_index=index,
                )
            )
    return facts


def ground_gnn_schemas(program: Program, universe: AtomUniverse) -> List[GroundGnnFact]:
    """
    Expand every schema of ``program`` against ``universe``.

    A guard without solutions contributes nothing. Heads must be distinct
    across all expansions and may not appear in their own γ.
    """
    atoms = AtomIndex(sorted(universe.atoms, key=str))
    fact_atoms = {f.atom for f in program.prob_facts}
    owner: Dict[Atom, GroundGnnFact] = {}
    result: List[GroundGnnFact] = []
    for i, schema in enumerate(program.gnn_schemas):
        for fact in _expand_schema(i, schema, atoms, universe):
            if any(owner.get(h) == fact for h in fact.head_group):
                continue
            for head in fact.head_group:
                if head in fact_atoms:
                    raise ProgramError(
                        f"{head} is both a probabilistic fact and a graph neural fact",
                        category=ErrorCategory.DUPLICATE_DECLARATION,
                        location=schema.location,
                        token=str(head),
                    )
                if head in owner:
                    raise ProgramError(
                        f"{head} is produced by two different graph neural facts",
                        category=ErrorCategory.DUPLICATE_DECLARATION,
                        location=schema.location,
                        token=str(head),
                    )
                if head in fact.gamma:
                    raise StratificationError([str(head), str(head)])
                owner[head] = fact
            result.append(fact)
    return result


@dataclass
class GroundProgram:
    """Everything parameter-independent about a checked program."""

    program: Program
    universe: AtomUniverse
    rules: List[Rule]
    gnn_facts: List[GroundGnnFact]

    def head_owner(self) -> Dict[Atom, GroundGnnFact]:
        return {h: f for f in self.gnn_facts for h in f.head_group}


def _build(program: Program) -> GroundProgram:
    base: Set[Atom] = {f.atom for f in program.prob_facts}
    heads: Set[Atom] = set()
    rounds = 0
    while True:
        rounds += 1
        atoms = base | heads
        rules = ground_program(program.rules, AtomUniverse.from_atoms(atoms))
        universe = AtomUniverse.from_atoms(minimal_model(atoms, rules))
        gnn_facts = ground_gnn_schemas(program, universe)
        new_heads = {h for f in gnn_facts for h in f.head_group}
        if new_heads <= heads:
            break
        heads |= new_heads
    logger.debug(
        "program grounded",
        source=program.source or "<input>",
        universe=len(universe),
        ground_rules=len(rules),
        gnn_facts=len(gnn_facts),
        rounds=rounds,
    )
    return GroundProgram(program, universe, rules, gnn_facts)


class _GroundCache:
    """Small identity-keyed LRU: programs hold dicts and are not hashable."""

    def __init__(self, maxsize: int = 256):
        self._entries: "OrderedDict[int, GroundProgram]" = OrderedDict()
        self._lock = threading.Lock()
        self.maxsize = maxsize

    def get(self, program: Program) -> GroundProgram:
        key = id(program)
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None and entry.program is program:
                self._entries.move_to_end(key)
                return entry
        built = _build(program)
        with self._lock:
            self._entries[key] = built
            while len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)
        return built

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


_cache = _GroundCache()


def ground(program: Program) -> GroundProgram:
    return _cache.get(program)


def possible_atom_universe(program: Program) -> AtomUniverse:
    """Minimal model with every probabilistic fact and every gnn head assumed true."""
    return ground(program).universe
