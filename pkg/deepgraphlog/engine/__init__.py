"""
Probabilistic inference under the possible-world semantics.
"""
from .evaluator import GnnEvaluator, ParameterSource
from .ground import GroundGnnFact, GroundProgram, ground, ground_gnn_schemas, possible_atom_universe
from .inference import (
    InferenceResult,
    PlanOutcome,
    QueryGradient,
    QueryPlan,
    answer_program_queries,
    compile_query,
    conditional,
    evaluate_plan,
    marginal,
)
from .stratify import depends_on, stratify
from .worlds import WorldAssignment, fact_probability, induced_graph, world_probability

__all__ = [
    "GnnEvaluator",
    "GroundGnnFact",
    "GroundProgram",
    "InferenceResult",
    "ParameterSource",
    "PlanOutcome",
    "QueryGradient",
    "QueryPlan",
    "WorldAssignment",
    "answer_program_queries",
    "compile_query",
    "conditional",
    "depends_on",
    "evaluate_plan",
    "fact_probability",
    "ground",
    "ground_gnn_schemas",
    "induced_graph",
    "marginal",
    "possible_atom_universe",
    "stratify",
    "world_probability",
]
