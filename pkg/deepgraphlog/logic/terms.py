"""
Logical syntax: terms, atoms, rules and atom universes.

All values are frozen dataclasses, hashable and safe to share between threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Tuple, Union

_PLAIN_SYMBOL = re.compile(r"^(?:[a-z][A-Za-z0-9_]*|-?\d+(?:\.\d+)?)$")
# predicate and functor names are never numbers
_PLAIN_NAME = re.compile(r"^[a-z][A-Za-z0-9_]*$")


def quote_symbol(symbol: str, plain: re.Pattern = _PLAIN_SYMBOL) -> str:
    """``symbol`` as source text, single-quoted unless it reads back unquoted."""
    if plain.match(symbol):
        return symbol
    escaped = symbol.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


@dataclass(frozen=True, slots=True)
class Constant:
    symbol: str

    def __str__(self) -> str:
        return quote_symbol(self.symbol)


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: Tuple["Term", ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return f"{quote_symbol(self.functor, _PLAIN_NAME)}({','.join(str(a) for a in self.args)})"


Term = Union[Constant, Variable, Compound]

# variable name -> term
Substitution = Mapping[str, Term]


def term_variables(term: Term) -> Iterator[str]:
    if isinstance(term, Variable):
        yield term.name
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from term_variables(arg)


def term_constants(term: Term) -> Iterator[str]:
    if isinstance(term, Constant):
        yield term.symbol
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from term_constants(arg)


def is_ground_term(term: Term) -> bool:
    return next(term_variables(term), None) is None


@dataclass(frozen=True, slots=True)
class Atom:
    """``predicate(t1, ..., tn)``; predicate identity is (name, arity)."""

    predicate: str
    args: Tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> Tuple[str, int]:
        return (self.predicate, len(self.args))

    def is_ground(self) -> bool:
        return all(is_ground_term(a) for a in self.args)

    def variables(self) -> Iterator[str]:
        for arg in self.args:
            yield from term_variables(arg)

    def constants(self) -> Iterator[str]:
        for arg in self.args:
            yield from term_constants(arg)

    def __str__(self) -> str:
        name = quote_symbol(self.predicate, _PLAIN_NAME)
        if not self.args:
            return name
        return f"{name}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True, slots=True)
class Rule:
    """``head :- body``; an empty body makes the rule a fact."""

    head: Atom
    body: Tuple[Atom, ...] = ()

    @property
    def is_fact(self) -> bool:
        return not self.body

    def is_ground(self) -> bool:
        return self.head.is_ground() and all(b.is_ground() for b in self.body)

    def variables(self) -> Iterator[str]:
        yield from self.head.variables()
        for atom in self.body:
            yield from atom.variables()

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


@dataclass(frozen=True)
class AtomUniverse:
    """A finite set of ground atoms together with every constant they mention."""

    atoms: frozenset
    constants: frozenset

    @classmethod
    def from_atoms(cls, atoms: Iterable[Atom], extra_constants: Iterable[str] = ()) -> "AtomUniverse":
        atom_set = frozenset(atoms)
        constants = set(extra_constants)
        for atom in atom_set:
            if not atom.is_ground():
                raise ValueError(f"universe atom {atom} is not ground")
            constants.update(atom.constants())
        return cls(atom_set, frozenset(constants))

    def by_indicator(self, predicate: str, arity: int) -> list:
        return sorted((a for a in self.atoms if a.predicate == predicate and a.arity == arity), key=str)

    def __contains__(self, atom: object) -> bool:
        return atom in self.atoms

    def __len__(self) -> int:
        return len(self.atoms)


def atom(predicate: str, *args: Union[str, Term]) -> Atom:
    """Convenience constructor: capitalised / underscore strings become variables."""
    return Atom(predicate, tuple(_coerce(a) for a in args))


def _coerce(value: Union[str, Term]) -> Term:
    if not isinstance(value, str):
        return value
    if value[:1].isupper() or value[:1] == "_":
        return Variable(value)
    return Constant(value)

