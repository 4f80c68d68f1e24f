"""
Unification and substitution.

``unify`` returns a most general unifier in normalized (idempotent) form:
no bound variable occurs in any binding, so a single application suffices.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple, Union

from .terms import Atom, Compound, Constant, Rule, Substitution, Term, Variable

Expr = Union[Atom, Term]


def apply_subst(expr: Expr, theta: Substitution) -> Expr:
    """Replace every variable in the domain of ``theta``; others are untouched."""
    if not theta:
        return expr
    if isinstance(expr, Atom):
        return Atom(expr.predicate, tuple(_apply_term(a, theta) for a in expr.args))
    return _apply_term(expr, theta)


def _apply_term(term: Term, theta: Substitution) -> Term:
    if isinstance(term, Variable):
        return theta.get(term.name, term)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_apply_term(a, theta) for a in term.args))
    return term


def _walk(term: Term, bindings: Dict[str, Term]) -> Term:
    while isinstance(term, Variable) and term.name in bindings:
        term = bindings[term.name]
    return term


def _occurs(name: str, term: Term, bindings: Dict[str, Term]) -> bool:
    stack = [term]
    while stack:
        current = _walk(stack.pop(), bindings)
        if isinstance(current, Variable):
            if current.name == name:
                return True
        elif isinstance(current, Compound):
            stack.extend(current.args)
    return False


def _resolve(term: Term, bindings: Dict[str, Term]) -> Term:
    term = _walk(term, bindings)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_resolve(a, bindings) for a in term.args))
    return term


def _as_term_pairs(e1: Expr, e2: Expr) -> Optional[List[Tuple[Term, Term]]]:
    if isinstance(e1, Atom) or isinstance(e2, Atom):
        if not (isinstance(e1, Atom) and isinstance(e2, Atom)):
            return None
        if e1.indicator != e2.indicator:
            return None
        return list(zip(e1.args, e2.args))
    return [(e1, e2)]


def unify(e1: Expr, e2: Expr, theta: Optional[Substitution] = None) -> Optional[Dict[str, Term]]:
    """
    Most general unifier of two atoms or two terms, or None.

    An optional starting substitution is extended (it must be normalized).
    """
    pairs = _as_term_pairs(e1, e2)
    if pairs is None:
        return None

    bindings: Dict[str, Term] = dict(theta or {})
    while pairs:
        left, right = pairs.pop()
        left, right = _walk(left, bindings), _walk(right, bindings)
        if left == right:
            continue
        if isinstance(left, Variable):
            if _occurs(left.name, right, bindings):
                return None
            bindings[left.name] = right
        elif isinstance(right, Variable):
            if _occurs(right.name, left, bindings):
                return None
            bindings[right.name] = left
        elif isinstance(left, Compound) and isinstance(right, Compound):
            if left.functor != right.functor or left.arity != right.arity:
                return None
            pairs.extend(zip(left.args, right.args))
        else:
            # distinct constants, or constant against compound
            return None

    return {name: _resolve(term, bindings) for name, term in bindings.items()}


def match(pattern: Atom, ground: Atom, theta: Optional[Dict[str, Term]] = None) -> Optional[Dict[str, Term]]:
    """One-way matching of a pattern atom against a ground atom (no occurs check needed)."""
    if pattern.indicator != ground.indicator:
        return None
    bindings = dict(theta) if theta else {}
    stack = list(zip(pattern.args, ground.args))
    while stack:
        pat, value = stack.pop()
        if isinstance(pat, Variable):
            bound = bindings.get(pat.name)
            if bound is None:
                bindings[pat.name] = value
            elif bound != value:
                return None
        elif isinstance(pat, Constant):
            if pat != value:
                return None
        else:
            if not isinstance(value, Compound) or value.functor != pat.functor or value.arity != pat.arity:
                return None
            stack.extend(zip(pat.args, value.args))
    return bindings


def standardize_apart(rule: Rule, index: int) -> Rule:
    """Rename every variable of ``rule`` with a per-instance suffix."""
    mapping = {name: Variable(f"{name}#{index}") for name in set(rule.variables())}
    if not mapping:
        return rule
    return Rule(apply_subst(rule.head, mapping), tuple(apply_subst(b, mapping) for b in rule.body))
