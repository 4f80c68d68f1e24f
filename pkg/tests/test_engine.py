"""
Tests for exact inference: world weights, marginals, conditionals and gradients.
"""
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np
import pytest

import deepgraphlog.engine.evaluator as evaluator_module
from deepgraphlog.config import reset_config
from deepgraphlog.engine import (
    GnnEvaluator,
    WorldAssignment,
    compile_query,
    conditional,
    evaluate_plan,
    ground,
    ground_gnn_schemas,
    induced_graph,
    marginal,
    possible_atom_universe,
    stratify,
    world_probability,
)
from deepgraphlog.errors import EnumerationCapError, ErrorCategory, InferenceError, UndefinedConditionalError
from deepgraphlog.frontend import Evidence, load_program
from deepgraphlog.gnn.graph import LabelledGraph
from deepgraphlog.gnn.network import forward
from deepgraphlog.logic import atom
from deepgraphlog.training import TrainingExample
from deepgraphlog.training.trainer import PlanCache, grad, loss
from observability.event_store import event_store

from .oracles import (
    brute_force_probability,
    central_difference,
    engine_probability,
    oracle_grounding,
    relative_error,
    store_for,
)
from .programs import BLOCKS_GNN, random_program_source

STRATIFIED = """
#model(m1, hidden=4).
#model(m2, hidden=4).
0.6::e(a,b). 0.3::e(b,a).
gnn(m2,[h/1, e/2],[a])::g(a).
gnn(m1,[e/2],[a])::h(a).
"""

SOFTMAX = """
#model(m, hidden=4).
edge(x,y). 0.5::edge(y,x).
gnn(m,[edge/2],[])::c(zero); c(one); c(two).
ok :- c(one).
ok :- c(two).
"""


def _chain_source():
    links = [(i, i + 1) for i in range(6)] + [(i, i + 2) for i in range(5)] + [(0, 3)]
    facts = " ".join(f"0.{3 + (i % 6)}::link(n{u},n{v})." for i, (u, v) in enumerate(links))
    return facts + "\npath(X,Y) :- link(X,Y).\npath(X,Y) :- link(X,Z), path(Z,Y).\n"


def _random_source(seed):
    rng = np.random.default_rng(seed)
    pairs = [(x, y) for x in "abc" for y in "abc" if (x, y) != ("c", "c")]
    chosen = rng.choice(len(pairs), size=5, replace=False)
    lines = ["e(c,c)."]
    for i in sorted(chosen):
        x, y = pairs[i]
        lines.append(f"{rng.uniform(0.05, 0.95):.3f}::e({x},{y}).")
    for x in "ab":
        lines.append(f"{rng.uniform(0.05, 0.95):.3f}::s({x}).")
    lines += [
        "p(X) :- e(X,Y).",
        "q(X,Y) :- e(X,Y), e(Y,X).",
        "r(X) :- p(X), s(X).",
        "u(X) :- q(X,Y), s(Y).",
        "u(X) :- e(X,c).",
    ]
    return "\n".join(lines)


def _chunks(count, fast=2):
    return [pytest.param(i, marks=() if i < fast else pytest.mark.slow) for i in range(count)]


class TestWorlds:
    """Weights of single worlds and the graphs they induce."""

    def test_world_probability(self, blocks_program):
        world = WorldAssignment.from_true(
            [atom("on", "a", "b"), atom("light", "a")],
            [atom("on", "a", "b"), atom("next_to", "a", "c"), atom("light", "a")],
        )
        assert world_probability(world, blocks_program, {}) == pytest.approx(0.21, abs=1e-12)

    def test_world_probability_with_network_output(self, blocks_gnn_program):
        world = WorldAssignment.from_true([atom("move", "a")], [atom("light", "a"), atom("move", "a")])
        weight = world_probability(world, blocks_gnn_program, {atom("move", "a"): 0.8})
        assert weight == pytest.approx(0.5 * 0.8)

    def test_softmax_group_needs_exactly_one_true_head(self):
        program = load_program(SOFTMAX)
        heads = [atom("c", "zero"), atom("c", "one"), atom("c", "two")]
        outputs = {heads[0]: 0.2, heads[1]: 0.3, heads[2]: 0.5}
        one = WorldAssignment.from_true([heads[1]], heads)
        two = WorldAssignment.from_true(heads[:2], heads)
        assert world_probability(one, program, outputs) == pytest.approx(0.3)
        assert world_probability(two, program, outputs) == 0.0

    @pytest.mark.parametrize("source", [SOFTMAX, BLOCKS_GNN])
    def test_world_probabilities_sum_to_one(self, source):
        program = load_program(source)
        grounded = ground(program)
        outputs = {}
        for fact in grounded.gnn_facts:
            shares = np.arange(1, len(fact.head_group) + 1, dtype=float)
            for head, share in zip(fact.head_group, shares / shares.sum() if fact.is_softmax else [0.35]):
                outputs[head] = float(share)
        domain = [f.atom for f in program.prob_facts] + [h for f in grounded.gnn_facts for h in f.head_group]
        total = 0.0
        for bits in product([False, True], repeat=len(domain)):
            world = WorldAssignment(dict(zip(domain, bits)))
            total += world_probability(world, program, outputs)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_induced_graph(self, blocks_gnn_program):
        fact = ground(blocks_gnn_program).gnn_facts[0]
        world = WorldAssignment.from_true([atom("on", "a", "b")], [atom("on", "a", "b"), atom("next_to", "a", "c")])
        graph = induced_graph(fact, world, {atom("on", "a", "b")})
        assert graph.vertices == ("a", "b", "c")
        assert graph.edges == (("a", "on", "b"),)


class TestMarginal:
    """Unconditional query probabilities."""

    def test_legal_move(self, blocks_program):
        assert marginal("legal_move(a)", blocks_program).probability == pytest.approx(0.41, abs=1e-9)

    def test_move(self, blocks_program):
        assert marginal("move(a)", blocks_program).probability == pytest.approx(0.82, abs=1e-9)

    def test_unprovable_query_is_zero(self, blocks_program):
        result = marginal("legal_move(b)", blocks_program)
        assert result.probability == 0.0
        assert result.relevant_fact_count == 0
        assert result.worlds_enumerated == 1

    def test_deterministic_facts_are_not_enumerated(self):
        program = load_program("on(a,b). 0.5::light(a). ok :- on(a,b), light(a).")
        result = marginal("ok", program)
        assert result.probability == pytest.approx(0.5)
        assert result.relevant_fact_count == 1
        assert result.worlds_enumerated == 2

    def test_result_json(self, blocks_program):
        data = json.loads(marginal("legal_move(a)", blocks_program).to_json())
        assert data["query"] == "legal_move(a)"
        assert data["relevant_fact_count"] == 3
        assert data["worlds_enumerated"] == 8
        assert "evidence" not in data

    def test_reachability(self, reachability_program):
        expected = brute_force_probability(reachability_program, atom("path", "a", "c"), store_for(reachability_program))
        assert marginal("path(a,c)", reachability_program).probability == pytest.approx(expected, abs=1e-9)

    def test_query_answered_event(self, blocks_program):
        marginal("legal_move(a)", blocks_program, run_id="run-7")
        events = event_store.query(run_id="run-7", event_type="query.answered")
        assert len(events) == 1
        assert events[0]["probability"] == pytest.approx(0.41)
        assert events[0]["component"] == "engine"


class TestConditional:
    """Probabilities given evidence literals."""

    def test_move_given_legal_move(self, blocks_program):
        assert conditional("move(a)", "legal_move(a)", blocks_program).probability == pytest.approx(1.0, abs=1e-9)

    def test_legal_move_given_light(self, blocks_program):
        assert conditional("legal_move(a)", "light(a)", blocks_program).probability == pytest.approx(0.82, abs=1e-9)

    def test_negative_evidence(self, blocks_program):
        result = conditional("move(a)", [Evidence(atom("on", "a", "b"), False)], blocks_program)
        assert result.probability == pytest.approx(0.4, abs=1e-9)
        assert result.evidence == ("not on(a,b)",)

    def test_negative_evidence_on_derived_atom(self, blocks_program):
        result = conditional("light(a)", [Evidence(atom("legal_move", "a"), False)], blocks_program)
        assert result.probability == pytest.approx(0.09 / 0.59, abs=1e-9)

    def test_conjunctive_evidence(self, blocks_program):
        evidence = [atom("light", "a"), Evidence(atom("next_to", "a", "c"), False)]
        assert conditional("legal_move(a)", evidence, blocks_program).probability == pytest.approx(0.7, abs=1e-9)

    def test_impossible_evidence(self, blocks_program):
        with pytest.raises(UndefinedConditionalError) as info:
            conditional("move(a)", "legal_move(b)", blocks_program)
        assert info.value.category == ErrorCategory.UNDEFINED_CONDITIONAL

    def test_zero_probability_fact_as_evidence(self):
        program = load_program("0.0::a. 0.5::b. c :- a, b.")
        with pytest.raises(UndefinedConditionalError):
            conditional("c", "a", program)


class TestCompile:
    """Plans: relevance, cap and grounding checks."""

    def test_enumeration_cap(self, reachability_program):
        with pytest.raises(EnumerationCapError) as info:
            compile_query("path(a,c)", reachability_program, cap=2)
        assert info.value.cap == 2
        assert info.value.count > 2
        assert info.value.category == ErrorCategory.CAP_EXCEEDED

    def test_default_cap_from_environment(self, monkeypatch, reachability_program):
        monkeypatch.setenv("DGL_ENUM_CAP", "1")
        reset_config()
        with pytest.raises(EnumerationCapError):
            marginal("path(a,c)", reachability_program)

    def test_non_ground_query(self, blocks_program):
        with pytest.raises(InferenceError) as info:
            compile_query("move(X)", blocks_program)
        assert info.value.category == ErrorCategory.NOT_GROUND

    def test_relevant_set_includes_gamma_of_gnn_facts(self, blocks_gnn_program):
        plan = compile_query("legal_move(a)", blocks_gnn_program)
        assert set(plan.relevant) == {atom("on", "a", "b"), atom("next_to", "a", "c"), atom("light", "a"), atom("move", "a")}
        assert plan.radices == [2, 2, 2, 2]

    def test_whole_head_group_is_relevant(self):
        plan = compile_query("ok", load_program(SOFTMAX))
        assert {atom("c", "zero"), atom("c", "one"), atom("c", "two")} <= set(plan.relevant)
        assert plan.radices[-1] == 3

    def test_stratified_order(self):
        program = load_program(STRATIFIED)
        facts = ground(program).gnn_facts
        ordered = stratify(list(reversed(facts)), ground(program).rules)
        assert [f.model_id for f in ordered] == ["m1", "m2"]


class TestOracleAgreement:
    """The engine matches brute-force enumeration of every world."""

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("query", ["p(a)", "r(b)", "q(a,b)", "u(a)"])
    def test_random_programs(self, seed, query):
        program = load_program(_random_source(seed))
        store = store_for(program)
        expected = brute_force_probability(program, atom(*_split(query)), store)
        assert engine_probability(program, query, store) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_programs_with_evidence(self, seed):
        program = load_program(_random_source(seed))
        store = store_for(program)
        evidence = [(atom("s", "a"), True), (atom("p", "b"), False)]
        expected = brute_force_probability(program, atom("u", "a"), store, evidence)
        actual = engine_probability(program, "u(a)", store, [Evidence(a, v) for a, v in evidence])
        assert actual == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("query", ["move(a)", "legal_move(a)"])
    def test_blocks_with_network(self, blocks_gnn_program, query):
        store = store_for(blocks_gnn_program, seed=3)
        expected = brute_force_probability(blocks_gnn_program, atom(*_split(query)), store)
        assert engine_probability(blocks_gnn_program, query, store) == pytest.approx(expected, abs=1e-9)

    def test_blocks_with_network_conditional(self, blocks_gnn_program):
        store = store_for(blocks_gnn_program, seed=5)
        expected = brute_force_probability(blocks_gnn_program, atom("move", "a"), store, [(atom("light", "a"), True)])
        actual = engine_probability(blocks_gnn_program, "move(a)", store, [atom("light", "a")])
        assert actual == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("query", ["g(a)", "h(a)"])
    def test_stacked_networks(self, query):
        program = load_program(STRATIFIED)
        store = store_for(program, seed=11)
        expected = brute_force_probability(program, atom(*_split(query)), store)
        assert engine_probability(program, query, store) == pytest.approx(expected, abs=1e-9)

    def test_softmax_heads_sum_to_one(self):
        program = load_program(SOFTMAX)
        store = store_for(program, seed=2)
        total = sum(engine_probability(program, f"c({k})", store) for k in ("zero", "one", "two"))
        assert total == pytest.approx(1.0, abs=1e-9)
        ok = engine_probability(program, "ok", store)
        assert ok == pytest.approx(1.0 - engine_probability(program, "c(zero)", store), abs=1e-9)
        assert ok == pytest.approx(brute_force_probability(program, atom("ok"), store), abs=1e-9)

    def test_network_output_matches_forward_on_fixed_graph(self):
        program = load_program("#model(m, hidden=4). e(a,b). gnn(m,[e/2],[a])::h(a).")
        store = store_for(program, seed=4)
        fact = ground(program).gnn_facts[0]
        graph = induced_graph(fact, WorldAssignment({}), {atom("e", "a", "b")})
        value, _ = forward(program.model_configs["m"], store.model("m"), graph, fact.targets)
        assert engine_probability(program, "h(a)", store) == pytest.approx(value, abs=1e-12)

    @pytest.mark.parametrize("chunk", _chunks(20))
    def test_random_programs_with_networks(self, chunk):
        rng = np.random.default_rng(1000 + chunk)
        for _ in range(10):
            source = random_program_source(rng)
            program = load_program(source)
            universe, gnn_facts = oracle_grounding(program)
            assert len(gnn_facts) <= 2, source
            store = store_for(program, seed=int(rng.integers(1000)))
            candidates = sorted(universe, key=str)
            query = candidates[int(rng.integers(len(candidates)))]
            expected = brute_force_probability(program, query, store)
            assert engine_probability(program, query, store) == pytest.approx(expected, abs=1e-9), source


class TestDeterminism:
    """Results do not depend on threading or caching."""

    def test_worker_count_does_not_change_results(self):
        program = load_program(_chain_source())
        plan = compile_query("path(n0,n6)", program)
        assert plan.world_count > 2048
        single = evaluate_plan(plan, workers=1).probability
        threaded = evaluate_plan(plan, workers=4).probability
        assert single == threaded

    def test_threads_from_environment(self, monkeypatch):
        program = load_program(_chain_source())
        single = marginal("path(n0,n6)", program).probability
        monkeypatch.setenv("DGL_THREADS", "3")
        reset_config()
        assert marginal("path(n0,n6)", program).probability == single

    def test_chain_matches_oracle(self):
        program = load_program(_chain_source())
        store = store_for(program)
        expected = brute_force_probability(program, atom("path", "n0", "n6"), store)
        assert engine_probability(program, "path(n0,n6)", store) == pytest.approx(expected, abs=1e-9)

    def test_cache_does_not_change_results(self, blocks_gnn_program):
        store = store_for(blocks_gnn_program, seed=1)
        plan = compile_query("legal_move(a)", blocks_gnn_program)
        cached = evaluate_plan(plan, store, use_cache=True)
        uncached = evaluate_plan(plan, store, use_cache=False)
        assert cached.probability == pytest.approx(uncached.probability, abs=1e-12)
        assert cached.distinct_gnn_evaluations <= uncached.distinct_gnn_evaluations
        assert cached.distinct_gnn_evaluations == 4  # one graph per subset of γ

    def test_repeated_evaluation_is_identical(self, blocks_gnn_program):
        store = store_for(blocks_gnn_program, seed=1)
        first = marginal("legal_move(a)", blocks_gnn_program, store).probability
        assert marginal("legal_move(a)", blocks_gnn_program, store).probability == first


class TestEvaluator:
    """The memo table of network evaluations."""

    @staticmethod
    def _evaluator():
        program = load_program(STRATIFIED)
        graph = LabelledGraph.build(["a", "b"], {}, [("a", "e", "b"), ("b", "e", "a")])
        return GnnEvaluator(program.model_configs, store_for(program, seed=3)), graph

    def test_forward_passes_run_outside_the_lock(self, monkeypatch):
        evaluator, graph = self._evaluator()
        barrier = threading.Barrier(2, timeout=5)

        def forward_together(*args):
            barrier.wait()
            return forward(*args)

        monkeypatch.setattr(evaluator_module, "forward", forward_together)
        with ThreadPoolExecutor(max_workers=2) as pool:
            results = list(pool.map(lambda t: evaluator.evaluate("m1", graph, (t,)), ["a", "b"]))
        assert evaluator.evaluations == 2
        assert [key[2] for key, _ in results] == [("a",), ("b",)]

    def test_racing_evaluations_share_the_first_result(self, monkeypatch):
        evaluator, graph = self._evaluator()
        barrier = threading.Barrier(2, timeout=5)

        def forward_together(*args):
            barrier.wait()
            return forward(*args)

        monkeypatch.setattr(evaluator_module, "forward", forward_together)
        with ThreadPoolExecutor(max_workers=2) as pool:
            (key, first), (_, second) = pool.map(lambda _: evaluator.evaluate("m1", graph, ("a",)), range(2))
        assert first is second
        assert evaluator.output_for(key) is first

    def test_cache_hit_skips_the_network(self):
        evaluator, graph = self._evaluator()
        evaluator.evaluate("m1", graph, ("a",))
        evaluator.evaluate("m1", graph, ("a",))
        assert evaluator.evaluations == 1


class TestGradient:
    """dP/dparameter from one enumeration pass."""

    def test_fact_gradient(self):
        program = load_program("t(0.3)::a. 0.5::b. q :- a, b.")
        plan = compile_query("q", program)
        outcome = evaluate_plan(plan, store_for(program), want_grad=True)
        assert outcome.gradient.facts["a"] == pytest.approx(0.5, abs=1e-12)

    def test_fact_gradient_of_disjunction(self):
        program = load_program("t(0.3)::a. 0.6::b. q :- a. q :- b.")
        outcome = evaluate_plan(compile_query("q", program), store_for(program), want_grad=True)
        assert outcome.gradient.facts["a"] == pytest.approx(0.4, abs=1e-12)

    def test_conditional_fact_gradient(self):
        program = load_program("t(0.3)::a. 0.5::b. q :- a, b. e :- a. e :- b.")
        store = store_for(program)
        plan = compile_query("q", program, evidence=["e"])
        analytic = evaluate_plan(plan, store, want_grad=True).gradient.facts["a"]
        # P(q|e) = 0.5 p / (1 - 0.5 (1 - p))
        p = 0.3
        expected = 0.5 * (0.5 + 0.5 * p) - 0.5 * p * 0.5
        expected /= (0.5 + 0.5 * p) ** 2
        assert analytic == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("evidence", [None, ["light(a)"]])
    def test_network_gradient_matches_finite_differences(self, blocks_gnn_program, evidence):
        store = store_for(blocks_gnn_program, seed=7)
        plan = compile_query("legal_move(a)", blocks_gnn_program, evidence=evidence)
        grads = evaluate_plan(plan, store, want_grad=True).gradient.models["m_move"]

        def probability():
            return evaluate_plan(plan, store).probability

        params = store.model("m_move")
        for (name, array), (_, grad) in zip(params.named_arrays(), grads.named_arrays()):
            for index in list(np.ndindex(array.shape))[:6]:
                numeric = central_difference(probability, array, index, eps=1e-6)
                assert abs(numeric - grad[index]) < 1e-6 or relative_error(numeric, grad[index]) < 1e-4, name

    @pytest.mark.parametrize("chunk", _chunks(4, fast=1))
    def test_loss_gradient_of_random_programs(self, chunk):
        rng = np.random.default_rng(2000 + chunk)
        for _ in range(5):
            source = random_program_source(rng, learnable=True)
            program = load_program(source)
            universe, _ = oracle_grounding(program)
            candidates = sorted(universe, key=str)
            picks = rng.choice(len(candidates), size=min(2, len(candidates)), replace=False)
            batch = [TrainingExample(candidates[int(i)], target) for i, target in zip(picks, (0.8, 0.3))]
            store = store_for(program, seed=int(rng.integers(1000)))
            plans = PlanCache()
            _, gradient = grad(batch, program, store, plans)

            def objective():
                return loss(batch, program, store, plans)

            for pid in sorted(store.fact_logits):
                numeric = central_difference(objective, store.fact_logits, pid)
                analytic = gradient.facts.get(pid, 0.0)
                assert abs(numeric - analytic) < 1e-7 or relative_error(numeric, analytic) < 1e-3, (source, pid)
            for (model_id, name), array in store.named_arrays():
                analytic_arrays = dict(gradient.models[model_id].named_arrays()) if model_id in gradient.models else {}
                for index in np.ndindex(array.shape):
                    numeric = central_difference(objective, array, index)
                    analytic = float(analytic_arrays[name][index]) if name in analytic_arrays else 0.0
                    assert abs(numeric - analytic) < 1e-7 or relative_error(numeric, analytic) < 1e-3, (source, name)


def _split(text):
    name, _, rest = text.partition("(")
    return (name, *rest.rstrip(")").split(",")) if rest else (name,)


KINSHIP = """
#model(m_father, hidden=4).
pOf(a,b). pOf(b,c). male(a). 0.5::male(b).
gnn(m_father,[male/1,pOf/2],[X,Y])::fatherOf(X,Y) :- pOf(X,Y).
gnn(m_father,[male/1,pOf/2],[X,Y])::fatherOf(X,Y) :- pOf(X,Y), pOf(Y,X).
grandfatherOf(X,Y) :- fatherOf(X,Z), fatherOf(Z,Y).
"""


class TestGrounding:
    """Possible-atom universe and gnn schema expansion."""

    def test_universe_assumes_every_fact_and_head(self, blocks_gnn_program):
        universe = possible_atom_universe(blocks_gnn_program)
        assert {atom("move", "a"), atom("legal_move", "a"), atom("light", "a")} <= universe.atoms

    def test_universe_closes_rules_over_gnn_heads(self):
        universe = possible_atom_universe(load_program(KINSHIP))
        assert atom("fatherOf", "a", "b") in universe
        assert atom("grandfatherOf", "a", "c") in universe

    def test_one_fact_per_guard_solution(self):
        program = load_program(KINSHIP)
        facts = ground_gnn_schemas(program, possible_atom_universe(program))
        assert [f.targets for f in facts] == [("a", "b"), ("b", "c")]
        assert all(f.node_set == ("a", "b", "c") for f in facts)
        assert [str(a) for a in facts[0].gamma] == ["male(a)", "male(b)", "pOf(a,b)", "pOf(b,c)"]
        assert facts[0].head_group == (atom("fatherOf", "a", "b"),)
        assert not facts[0].is_softmax
