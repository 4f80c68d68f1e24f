"""
Exact inference by enumerating the possible worlds over a query's relevant facts.

A world fixes every relevant probabilistic fact and every relevant graph
neural head group. Its weight is the product of the fact probabilities (or
their complements) and of the network outputs on the graphs the world
induces; the query probability is the total weight of the worlds whose
minimal model contains the query (and satisfies the evidence).
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from logging_setup import Component, get_logger
from observability.events import engine_emitter

from ..config import get_config
from ..errors import EnumerationCapError, ErrorCategory, InferenceError, UndefinedConditionalError
from ..frontend.program import Evidence, ProbFact, Program
from ..frontend.validate import validate
from ..gnn.graph import LabelledGraph
from ..gnn.params import ParamTensors
from ..logic.grounding import ForwardChainer
from ..logic.proofs import ProofSupport
from ..logic.terms import Atom
from .evaluator import EvalKey, GnnEvaluator, ParameterSource
from .ground import GroundGnnFact, ground, vertex_name
from .stratify import stratify
from .worlds import fact_probability

logger = get_logger(Component.ENGINE)

# Worlds per enumeration chunk; fixed so results do not depend on the worker count.
CHUNK_SIZE = 2048

EvidenceLike = Union[Atom, Evidence, str]


@dataclass(frozen=True)
class InferenceResult:
    query: str
    probability: float
    worlds_enumerated: int
    distinct_gnn_evaluations: int
    relevant_fact_count: int
    evidence: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        data = {
            "query": self.query,
            "probability": self.probability,
            "worlds_enumerated": self.worlds_enumerated,
            "distinct_gnn_evaluations": self.distinct_gnn_evaluations,
            "relevant_fact_count": self.relevant_fact_count,
        }
        if self.evidence:
            data["evidence"] = list(self.evidence)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class _FactUnit:
    atom_id: int
    fact: ProbFact


@dataclass
class _GnnUnit:
    fact: GroundGnnFact
    head_ids: Tuple[int, ...]
    gamma_ids: Tuple[int, ...]
    graphs: Dict[Tuple[int, ...], object] = field(default_factory=dict)

    @property
    def choices(self) -> int:
        return len(self.head_ids) if self.fact.is_softmax else 2


@dataclass
class QueryPlan:
    """Everything about a (query, evidence) pair that does not depend on parameters."""

    program: Program
    query: Atom
    evidence: Tuple[Tuple[Atom, bool], ...]
    chainer: ForwardChainer
    query_id: int
    evidence_ids: Tuple[Tuple[int, bool], ...]
    fixed_ids: Tuple[int, ...]
    fact_units: Tuple[_FactUnit, ...]
    gnn_units: Tuple[_GnnUnit, ...]
    relevant: Tuple[Atom, ...]

    @property
    def radices(self) -> List[int]:
        return [2] * len(self.fact_units) + [u.choices for u in self.gnn_units]

    @property
    def world_count(self) -> int:
        return int(np.prod(self.radices, dtype=object)) if self.radices else 1


@dataclass
class QueryGradient:
    """dP/d(fact probability) per learnable param id and dP/dθ per model."""

    facts: Dict[str, float]
    models: Dict[str, ParamTensors]


@dataclass
class PlanOutcome:
    probability: float
    worlds_enumerated: int
    distinct_gnn_evaluations: int
    relevant_fact_count: int
    gradient: Optional[QueryGradient] = None


def _coerce_atom(value: Union[Atom, str]) -> Atom:
    if isinstance(value, Atom):
        return value
    from ..frontend.parser import parse_atom

    return parse_atom(value)


def _coerce_evidence(evidence: Union[EvidenceLike, Sequence[EvidenceLike], None]) -> Tuple[Tuple[Atom, bool], ...]:
    if evidence is None:
        return ()
    if isinstance(evidence, (Atom, Evidence, str)):
        evidence = [evidence]
    items = []
    for e in evidence:
        if isinstance(e, Evidence):
            items.append((e.atom, e.value))
        else:
            items.append((_coerce_atom(e), True))
    return tuple(items)


def _checked(program: Program) -> Program:
    return program if program.checked else validate(program)


def compile_query(
    query: Union[Atom, str],
    program: Program,
    evidence: Union[EvidenceLike, Sequence[EvidenceLike], None] = None,
    cap: Optional[int] = None,
) -> QueryPlan:
    """
    Ground the program, collect the query's relevant facts (closed under the
    γ of every relevant graph neural fact and under whole head groups), and
    fix the enumeration order.
    """
    program = _checked(program)
    query = _coerce_atom(query)
    evidence_items = _coerce_evidence(evidence)
    for a in [query] + [e for e, _ in evidence_items]:
        if not a.is_ground():
            raise InferenceError(f"{a} is not ground", category=ErrorCategory.NOT_GROUND, token=str(a))

    gp = ground(program)
    deterministic = [f.atom for f in program.deterministic_facts]
    uncertain = {f.atom: f for f in program.uncertain_facts}
    owner = gp.head_owner()
    support = ProofSupport(gp.rules, set(deterministic) | set(uncertain) | set(owner))

    relevant: Dict[Atom, None] = {}
    expanded: set = set()
    goals: List[Atom] = [query] + [e for e, _ in evidence_items]
    while goals:
        for a in sorted(support.support(goals), key=str):
            if a in uncertain:
                relevant[a] = None
            elif a in owner:
                for h in owner[a].head_group:
                    relevant[h] = None
        goals = []
        for a in list(relevant):
            fact = owner.get(a)
            if fact is not None and fact.head_group not in expanded:
                expanded.add(fact.head_group)
                goals.extend(fact.gamma)

    cap = get_config().enumeration_cap if cap is None else cap
    if len(relevant) > cap:
        raise EnumerationCapError(len(relevant), cap, str(query))

    chainer = ForwardChainer(gp.rules)
    fact_units = tuple(
        _FactUnit(chainer.intern(f.atom), f) for f in program.prob_facts if f.atom in relevant
    )
    gnn_facts = [f for f in gp.gnn_facts if f.head_group[0] in relevant]
    gnn_units = tuple(
        _GnnUnit(
            fact=f,
            head_ids=tuple(chainer.intern(h) for h in f.head_group),
            gamma_ids=tuple(chainer.intern(a) for a in f.gamma),
        )
        for f in stratify(gnn_facts, gp.rules)
    )
    plan = QueryPlan(
        program=program,
        query=query,
        evidence=evidence_items,
        chainer=chainer,
        query_id=chainer.intern(query),
        evidence_ids=tuple((chainer.intern(e), v) for e, v in evidence_items),
        fixed_ids=tuple(chainer.intern(a) for a in deterministic),
        fact_units=fact_units,
        gnn_units=gnn_units,
        relevant=tuple(relevant),
    )
    logger.debug(
        "query compiled",
        query=str(query),
        relevant_facts=len(relevant),
        gnn_facts=len(gnn_units),
        worlds=plan.world_count,
    )
    return plan


def _induced(unit: _GnnUnit, model: set) -> LabelledGraph:
    mask = tuple(i for i, atom_id in enumerate(unit.gamma_ids) if atom_id in model)
    graph = unit.graphs.get(mask)
    if graph is None:
        labels: Dict[str, set] = {v: set() for v in unit.fact.node_set}
        edges = []
        for i in mask:
            a = unit.fact.gamma[i]
            if a.arity == 1:
                labels[vertex_name(a.args[0])].add(a.predicate)
            else:
                edges.append((vertex_name(a.args[0]), a.predicate, vertex_name(a.args[1])))
        graph = LabelledGraph.build(unit.fact.node_set, labels, edges)
        unit.graphs[mask] = graph
    return graph


@dataclass
class _Partial:
    joint: float = 0.0
    evidence: float = 0.0
    joint_facts: Dict[str, float] = field(default_factory=dict)
    evidence_facts: Dict[str, float] = field(default_factory=dict)
    joint_gnn: Dict[EvalKey, np.ndarray] = field(default_factory=dict)
    evidence_gnn: Dict[EvalKey, np.ndarray] = field(default_factory=dict)


def _accumulate(facts: Dict[str, float], gnn: Dict[EvalKey, np.ndarray], fact_d, gnn_d) -> None:
    for pid, v in fact_d:
        facts[pid] = facts.get(pid, 0.0) + v
    for key, size, index, v in gnn_d:
        acc = gnn.get(key)
        if acc is None:
            acc = gnn[key] = np.zeros(size)
        acc[index] += v


def _run_chunk(
    plan: QueryPlan,
    evaluator: GnnEvaluator,
    fact_probs: Sequence[float],
    start: int,
    stop: int,
    want_grad: bool,
) -> _Partial:
    out = _Partial()
    radices = plan.radices
    n_facts = len(plan.fact_units)
    has_evidence = bool(plan.evidence_ids)
    for world in range(start, stop):
        digits = []
        rest = world
        for r in radices:
            rest, d = divmod(rest, r)
            digits.append(d)

        true_ids = list(plan.fixed_ids)
        for unit, d in zip(plan.fact_units, digits):
            if d == 0:
                true_ids.append(unit.atom_id)
        for unit, d in zip(plan.gnn_units, digits[n_facts:]):
            if unit.fact.is_softmax:
                true_ids.append(unit.head_ids[d])
            elif d == 0:
                true_ids.append(unit.head_ids[0])

        model = plan.chainer.closure_ids(true_ids)
        holds_evidence = all((atom_id in model) == value for atom_id, value in plan.evidence_ids)
        if not holds_evidence:
            continue
        holds_joint = plan.query_id in model

        if not holds_joint and not has_evidence:
            continue

        factors = []
        for unit, d, p in zip(plan.fact_units, digits, fact_probs):
            factors.append(p if d == 0 else 1.0 - p)
        gnn_keys = []
        for unit, d in zip(plan.gnn_units, digits[n_facts:]):
            key, output = evaluator.evaluate(unit.fact.model_id, _induced(unit, model), unit.fact.targets)
            gnn_keys.append(key)
            if unit.fact.is_softmax:
                factors.append(float(output[d]))
            else:
                factors.append(output if d == 0 else 1.0 - output)

        weight = 1.0
        for phi in factors:
            weight *= phi
        if holds_joint:
            out.joint += weight
        if has_evidence:
            out.evidence += weight

        if not want_grad:
            continue
        # d weight / d factor_i without dividing by a possibly zero factor
        m = len(factors)
        suffix = [1.0] * (m + 1)
        for i in range(m - 1, -1, -1):
            suffix[i] = suffix[i + 1] * factors[i]
        prefix = 1.0
        fact_d = []
        gnn_d = []
        for i in range(m):
            others = prefix * suffix[i + 1]
            prefix *= factors[i]
            if i < n_facts:
                unit = plan.fact_units[i]
                if unit.fact.learnable:
                    fact_d.append((unit.fact.param_id, others if digits[i] == 0 else -others))
            else:
                j = i - n_facts
                unit = plan.gnn_units[j]
                d = digits[i]
                if unit.fact.is_softmax:
                    gnn_d.append((gnn_keys[j], len(unit.head_ids), d, others))
                else:
                    gnn_d.append((gnn_keys[j], 1, 0, others if d == 0 else -others))
        if holds_joint:
            _accumulate(out.joint_facts, out.joint_gnn, fact_d, gnn_d)
        if has_evidence:
            _accumulate(out.evidence_facts, out.evidence_gnn, fact_d, gnn_d)
    return out


def _merge(parts: Sequence[_Partial]) -> _Partial:
    total = _Partial()
    for part in parts:
        total.joint += part.joint
        total.evidence += part.evidence
        _accumulate(total.joint_facts, total.joint_gnn, part.joint_facts.items(), [])
        _accumulate(total.evidence_facts, total.evidence_gnn, part.evidence_facts.items(), [])
        for src, dst in ((part.joint_gnn, total.joint_gnn), (part.evidence_gnn, total.evidence_gnn)):
            for key, vec in src.items():
                if key in dst:
                    dst[key] = dst[key] + vec
                else:
                    dst[key] = vec.copy()
    return total


def _default_store(program: Program) -> ParameterSource:
    from ..training.store import ParamStore

    return ParamStore.for_program(program)


def evaluate_plan(
    plan: QueryPlan,
    store: Optional[ParameterSource] = None,
    want_grad: bool = False,
    use_cache: Optional[bool] = None,
    workers: Optional[int] = None,
) -> PlanOutcome:
    """Enumerate the plan's worlds under the parameters in ``store``."""
    config = get_config()
    store = store if store is not None else _default_store(plan.program)
    use_cache = config.gnn_cache if use_cache is None else use_cache
    workers = config.worker_count() if workers is None else max(1, workers)

    evaluator = GnnEvaluator(plan.program.model_configs, store, use_cache=use_cache)
    fact_probs = [fact_probability(u.fact, store.fact_logits) for u in plan.fact_units]
    total = plan.world_count
    bounds = [(s, min(s + CHUNK_SIZE, total)) for s in range(0, total, CHUNK_SIZE)]

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
            parts = list(pool.map(lambda b: _run_chunk(plan, evaluator, fact_probs, b[0], b[1], want_grad), bounds))
    else:
        parts = [_run_chunk(plan, evaluator, fact_probs, s, e, want_grad) for s, e in bounds]
    acc = _merge(parts)

    if plan.evidence_ids:
        if acc.evidence <= 0.0:
            names = ", ".join(f"{a}={str(v).lower()}" for a, v in plan.evidence)
            raise UndefinedConditionalError(f"evidence {names} has probability 0", token=names)
        probability = acc.joint / acc.evidence
    else:
        probability = acc.joint
    probability = min(1.0, max(0.0, probability))

    gradient = None
    if want_grad:
        if plan.evidence_ids:
            # quotient rule for P(q, e) / P(e)
            a, b = 1.0 / acc.evidence, acc.joint / acc.evidence**2
            facts = {pid: a * v for pid, v in acc.joint_facts.items()}
            for pid, v in acc.evidence_facts.items():
                facts[pid] = facts.get(pid, 0.0) - b * v
            upstream = {k: a * v for k, v in acc.joint_gnn.items()}
            for k, v in acc.evidence_gnn.items():
                upstream[k] = upstream.get(k, 0.0) - b * v
        else:
            facts, upstream = acc.joint_facts, acc.joint_gnn
        sigmoid_upstream = {k: (v[0] if v.shape == (1,) else v) for k, v in upstream.items()}
        gradient = QueryGradient(facts=facts, models=evaluator.backpropagate(sigmoid_upstream))

    return PlanOutcome(
        probability=probability,
        worlds_enumerated=total,
        distinct_gnn_evaluations=evaluator.evaluations,
        relevant_fact_count=len(plan.relevant),
        gradient=gradient,
    )


def _result(plan: QueryPlan, outcome: PlanOutcome) -> InferenceResult:
    return InferenceResult(
        query=str(plan.query),
        probability=outcome.probability,
        worlds_enumerated=outcome.worlds_enumerated,
        distinct_gnn_evaluations=outcome.distinct_gnn_evaluations,
        relevant_fact_count=outcome.relevant_fact_count,
        evidence=tuple(str(a) if v else f"not {a}" for a, v in plan.evidence),
    )


def marginal(
    query: Union[Atom, str],
    program: Program,
    store: Optional[ParameterSource] = None,
    *,
    cap: Optional[int] = None,
    use_cache: Optional[bool] = None,
    workers: Optional[int] = None,
    run_id: Optional[str] = None,
) -> InferenceResult:
    """P(query)."""
    plan = compile_query(query, program, cap=cap)
    result = _result(plan, evaluate_plan(plan, store, use_cache=use_cache, workers=workers))
    engine_emitter.query_answered(run_id or "adhoc", result.to_dict())
    return result


def conditional(
    query: Union[Atom, str],
    evidence: Union[EvidenceLike, Sequence[EvidenceLike]],
    program: Program,
    store: Optional[ParameterSource] = None,
    *,
    cap: Optional[int] = None,
    use_cache: Optional[bool] = None,
    workers: Optional[int] = None,
    run_id: Optional[str] = None,
) -> InferenceResult:
    """
    P(query | evidence) for a conjunction of evidence literals. A negative
    literal ``Evidence(e, False)`` conditions on e being false, which equals
    (P(q) - P(q, e)) / (1 - P(e)) for a single literal.
    """
    plan = compile_query(query, program, evidence=evidence, cap=cap)
    result = _result(plan, evaluate_plan(plan, store, use_cache=use_cache, workers=workers))
    engine_emitter.query_answered(run_id or "adhoc", result.to_dict())
    return result


def answer_program_queries(
    program: Program,
    store: Optional[ParameterSource] = None,
    *,
    cap: Optional[int] = None,
    run_id: Optional[str] = None,
) -> List[InferenceResult]:
    """Answer every ``query/1`` directive, conditioned on all evidence directives."""
    results = []
    for q in program.queries:
        if program.evidence:
            results.append(conditional(q, list(program.evidence), program, store, cap=cap, run_id=run_id))
        else:
            results.append(marginal(q, program, store, cap=cap, run_id=run_id))
    return results
