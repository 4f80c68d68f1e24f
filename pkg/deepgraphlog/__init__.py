"""
DeepGraphLog: probabilistic logic programs whose facts may be scored by
relational graph neural networks over graphs that depend on the world.

    from deepgraphlog import load_program, marginal
    program = load_program(open("blocks.dgl").read(), "blocks.dgl")
    marginal("legal_move(a)", program).probability
"""
from .engine import answer_program_queries, compile_query, conditional, evaluate_plan, marginal
from .errors import DeepGraphLogError
from .frontend import format_program, load_program, parse, parse_file, validate
from .training import ParamStore, TrainingExample, TrainOptions, fit

__version__ = "0.1.0"

__all__ = [
    "DeepGraphLogError",
    "ParamStore",
    "TrainOptions",
    "TrainingExample",
    "answer_program_queries",
    "compile_query",
    "conditional",
    "evaluate_plan",
    "fit",
    "format_program",
    "load_program",
    "marginal",
    "parse",
    "parse_file",
    "validate",
]
