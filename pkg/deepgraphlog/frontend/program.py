"""
Program objects produced by the parser and checked by the validator.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, Optional, Tuple, Union

from ..errors import SourceLocation
from ..gnn.config import GnnConfig
from ..logic.terms import Atom, Rule, Term, term_variables


@dataclass(frozen=True)
class ProbFact:
    """``p::atom``; a fact without annotation has probability 1.0."""

    atom: Atom
    prob: float = 1.0
    learnable: bool = False
    param_id: Optional[str] = None
    location: Optional[SourceLocation] = field(default=None, compare=False)

    @property
    def is_deterministic(self) -> bool:
        return not self.learnable and self.prob == 1.0


@dataclass(frozen=True)
class GammaIndicator:
    """``name/arity`` inside a γ list: every atom of that predicate."""

    predicate: str
    arity: int

    def __str__(self) -> str:
        return f"{self.predicate}/{self.arity}"


GammaItem = Union[Atom, GammaIndicator]


def gamma_indicator(item: GammaItem) -> Tuple[str, int]:
    if isinstance(item, GammaIndicator):
        return (item.predicate, item.arity)
    return item.indicator


@dataclass(frozen=True)
class GnnFactSchema:
    """``gnn(model, [γ], [targets]) :: h1; ...; hk :- guard.``"""

    model_id: str
    gamma_spec: Tuple[GammaItem, ...]
    targets: Tuple[Term, ...]
    head_group: Tuple[Atom, ...]
    guard: Tuple[Atom, ...] = ()
    location: Optional[SourceLocation] = field(default=None, compare=False)

    @property
    def is_softmax(self) -> bool:
        return len(self.head_group) > 1

    def variables(self) -> Iterator[str]:
        for t in self.targets:
            yield from term_variables(t)
        for h in self.head_group:
            yield from h.variables()
        for g in self.guard:
            yield from g.variables()
        for item in self.gamma_spec:
            if isinstance(item, Atom):
                yield from item.variables()


@dataclass(frozen=True)
class Evidence:
    atom: Atom
    value: bool = True


@dataclass(frozen=True)
class Program:
    """
    A DeepGraphLog program (F, R, G) plus model declarations and the
    program's own query/evidence directives.
    """

    prob_facts: Tuple[ProbFact, ...] = ()
    rules: Tuple[Rule, ...] = ()
    gnn_schemas: Tuple[GnnFactSchema, ...] = ()
    model_configs: Dict[str, GnnConfig] = field(default_factory=dict)
    queries: Tuple[Atom, ...] = ()
    evidence: Tuple[Evidence, ...] = ()
    checked: bool = field(default=False, compare=False)
    source: Optional[str] = field(default=None, compare=False)

    @property
    def deterministic_facts(self) -> Tuple[ProbFact, ...]:
        return tuple(f for f in self.prob_facts if f.is_deterministic)

    @property
    def uncertain_facts(self) -> Tuple[ProbFact, ...]:
        return tuple(f for f in self.prob_facts if not f.is_deterministic)

    @property
    def learnable_facts(self) -> Tuple[ProbFact, ...]:
        return tuple(f for f in self.prob_facts if f.learnable)

    def statement_count(self) -> int:
        return (
            len(self.prob_facts)
            + len(self.rules)
            + len(self.gnn_schemas)
            + len(self.model_configs)
            + len(self.queries)
            + len(self.evidence)
        )

    def with_(self, **changes) -> "Program":
        return replace(self, **changes)
