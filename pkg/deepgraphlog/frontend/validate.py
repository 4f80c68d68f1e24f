"""
Static checks turning a parsed Program into a checked one.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Dict, Iterable, List, Set, Tuple

import networkx as nx

from logging_setup import Component, get_logger

from ..errors import ErrorCategory, ProgramError, StratificationError
from ..gnn.config import GnnConfig, Readout
from ..logic.terms import term_variables
from .program import GammaIndicator, GnnFactSchema, ProbFact, Program, gamma_indicator

logger = get_logger(Component.FRONTEND)

Indicator = Tuple[str, int]


def _fmt(indicator: Indicator) -> str:
    return f"{indicator[0]}/{indicator[1]}"


def _check_probabilities(facts: Iterable[ProbFact]) -> List[ProbFact]:
    checked = []
    for fact in facts:
        if not 0.0 <= fact.prob <= 1.0:
            raise ProgramError(
                f"probability {fact.prob!r} of {fact.atom} is outside [0, 1]",
                category=ErrorCategory.INVALID_PROBABILITY,
                location=fact.location,
                token=str(fact.atom),
            )
        if fact.learnable and fact.param_id is None:
            fact = replace(fact, param_id=str(fact.atom))
        checked.append(fact)
    return checked


def _schema_config(schema: GnnFactSchema, declared: GnnConfig) -> GnnConfig:
    # first-appearance order
    relations: Dict[str, None] = {}
    labels: Dict[str, None] = {}
    for item in schema.gamma_spec:
        name, arity = gamma_indicator(item)
        if arity == 2:
            relations[name] = None
        elif arity == 1:
            labels[name] = None
        else:
            raise ProgramError(
                f"γ item {item} of model '{schema.model_id}' has arity {arity}; "
                "graph inputs are built from unary and binary atoms only",
                category=ErrorCategory.INVALID_GAMMA,
                location=schema.location,
                token=str(item),
            )

    inferred = Readout.for_targets(len(schema.targets))
    readout = declared.readout or inferred
    if readout is None or readout.target_count != len(schema.targets):
        raise ProgramError(
            f"model '{schema.model_id}' with readout={readout.value if readout else '?'} "
            f"cannot take {len(schema.targets)} targets",
            category=ErrorCategory.INVALID_GAMMA,
            location=schema.location,
            token=schema.model_id,
        )
    return replace(
        declared,
        readout=readout,
        relations=tuple(relations),
        vertex_label_set=tuple(labels),
        output_arity=len(schema.head_group),
    )


def _check_schema_shape(schema: GnnFactSchema) -> None:
    heads = schema.head_group
    if len(set(heads)) != len(heads):
        raise ProgramError(
            f"head group of model '{schema.model_id}' repeats an atom",
            category=ErrorCategory.DUPLICATE_DECLARATION,
            location=schema.location,
        )
    if len({h.arity for h in heads}) != 1:
        raise ProgramError(
            f"head group of model '{schema.model_id}' mixes arities",
            category=ErrorCategory.ARITY_CONFLICT,
            location=schema.location,
        )

    bindable = {v for t in schema.targets for v in term_variables(t)}
    bindable.update(v for g in schema.guard for v in g.variables())
    for head in heads:
        unbound = sorted(set(head.variables()) - bindable)
        if unbound:
            raise ProgramError(
                f"variable {unbound[0]} of {head} is bound by neither the targets nor the guard",
                category=ErrorCategory.UNBOUND_VARIABLE,
                location=schema.location,
                token=unbound[0],
            )


def dependency_graph(program: Program) -> nx.DiGraph:
    """
    Predicate-level dependency graph: an edge ``a -> b`` means atoms of ``b``
    can be derived from (or are scored from) atoms of ``a``. Edges contributed
    by gnn schemas carry ``via=<model id>``.
    """
    graph = nx.DiGraph()
    for rule in program.rules:
        head = rule.head.indicator
        graph.add_node(head)
        for b in rule.body:
            graph.add_edge(b.indicator, head)
    for schema in program.gnn_schemas:
        sources = [gamma_indicator(item) for item in schema.gamma_spec]
        for head in schema.head_group:
            graph.add_node(head.indicator)
            for src in sources:
                graph.add_edge(src, head.indicator, via=schema.model_id)
    return graph


def check_stratification(program: Program) -> None:
    """Raise StratificationError if some gnn head can feed back into its own γ."""
    graph = dependency_graph(program)
    for schema in program.gnn_schemas:
        for item in schema.gamma_spec:
            src = gamma_indicator(item)
            for head in schema.head_group:
                target = head.indicator
                if src == target:
                    raise StratificationError([_fmt(target), _fmt(target)])
                if nx.has_path(graph, target, src):
                    path = nx.shortest_path(graph, target, src)
                    raise StratificationError([_fmt(p) for p in path] + [_fmt(target)])


def validate(program: Program) -> Program:
    """
    Verify every Program invariant and return the checked program: learnable
    facts get parameter ids, model configs get their relations, vertex labels,
    readout and output arity.
    """
    facts = _check_probabilities(program.prob_facts)

    configs: Dict[str, GnnConfig] = {}
    for schema in program.gnn_schemas:
        declared = program.model_configs.get(schema.model_id)
        if declared is None:
            raise ProgramError(
                f"unknown model '{schema.model_id}': no #model declaration",
                category=ErrorCategory.UNKNOWN_MODEL,
                location=schema.location,
                token=schema.model_id,
            )
        _check_schema_shape(schema)
        cfg = _schema_config(schema, declared)
        previous = configs.get(schema.model_id)
        if previous is not None and previous.signature() != cfg.signature():
            raise ProgramError(
                f"model '{schema.model_id}' is used by schemas with different inputs or outputs",
                category=ErrorCategory.INVALID_GAMMA,
                location=schema.location,
                token=schema.model_id,
            )
        configs[schema.model_id] = cfg

    model_configs = {
        model_id: configs.get(model_id, cfg) for model_id, cfg in program.model_configs.items()
    }

    fact_atoms = {f.atom for f in facts}
    for schema in program.gnn_schemas:
        for head in schema.head_group:
            if head.is_ground() and head in fact_atoms:
                raise ProgramError(
                    f"{head} is declared both as a probabilistic fact and as a graph neural fact",
                    category=ErrorCategory.DUPLICATE_DECLARATION,
                    location=schema.location,
                    token=str(head),
                )

    check_stratification(program)

    declared_predicates: Set[Indicator] = {f.atom.indicator for f in facts}
    declared_predicates.update(r.head.indicator for r in program.rules)
    declared_predicates.update(h.indicator for s in program.gnn_schemas for h in s.head_group)
    for schema in program.gnn_schemas:
        for item in schema.gamma_spec:
            if isinstance(item, GammaIndicator) and gamma_indicator(item) not in declared_predicates:
                logger.info(
                    "γ indicator names an undeclared predicate; it will contribute no atoms",
                    model_id=schema.model_id,
                    indicator=str(item),
                )

    for q in list(program.queries) + [e.atom for e in program.evidence]:
        if not q.is_ground():
            raise ProgramError(
                f"query/evidence atom {q} must be ground",
                category=ErrorCategory.NOT_GROUND,
                token=str(q),
            )

    checked = replace(program, prob_facts=tuple(facts), model_configs=model_configs, checked=True)
    logger.debug(
        "program validated",
        source=program.source or "<input>",
        facts=len(facts),
        rules=len(program.rules),
        gnn_schemas=len(program.gnn_schemas),
    )
    return checked


def load_program(source: str, file: str | None = None) -> Program:
    """Parse and validate in one step."""
    from .parser import parse

    return validate(parse(source, file))
