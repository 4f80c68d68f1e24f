"""
DSL frontend: tokenizer, parser, printer and validator for .dgl programs.
"""
from .parser import parse, parse_atom, parse_file
from .printer import format_program
from .program import Evidence, GammaIndicator, GnnFactSchema, ProbFact, Program
from .validate import check_stratification, dependency_graph, load_program, validate

__all__ = [
    "Evidence",
    "GammaIndicator",
    "GnnFactSchema",
    "ProbFact",
    "Program",
    "check_stratification",
    "dependency_graph",
    "format_program",
    "load_program",
    "parse",
    "parse_atom",
    "parse_file",
    "validate",
]
