"""
Logic core: syntax objects, unification, grounding, least models and
relevant-fact extraction for definite programs.
"""
from .grounding import AtomIndex, ForwardChainer, ground_program, minimal_model, solve_conjunction
from .proofs import ProofSupport, RelevantFacts, relevant_facts
from .terms import Atom, AtomUniverse, Compound, Constant, Rule, Substitution, Term, Variable, atom
from .unify import apply_subst, match, standardize_apart, unify

__all__ = [
    "Atom",
    "AtomIndex",
    "AtomUniverse",
    "Compound",
    "Constant",
    "ForwardChainer",
    "ProofSupport",
    "RelevantFacts",
    "Rule",
    "Substitution",
    "Term",
    "Variable",
    "apply_subst",
    "atom",
    "ground_program",
    "match",
    "minimal_model",
    "relevant_facts",
    "solve_conjunction",
    "standardize_apart",
    "unify",
]
