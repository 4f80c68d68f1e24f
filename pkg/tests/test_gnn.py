"""
Tests for the relational message-passing networks, parameter snapshots and 1-WL refinement.
"""
import json

import numpy as np
import pytest

from deepgraphlog.errors import DataError, ErrorCategory, GnnRuntimeError
from deepgraphlog.experiments.graphs import directed_edges, six_cycle, wl_pair
from deepgraphlog.gnn.config import GnnConfig, Readout
from deepgraphlog.gnn.graph import LabelledGraph
from deepgraphlog.gnn.network import backward, encode_features, forward, normalized_adjacency
from deepgraphlog.gnn.params import init_params, zero_params
from deepgraphlog.gnn.snapshot import load_snapshot, save_snapshot, snapshot_from_json, snapshot_to_json
from deepgraphlog.gnn.wl import wl1_refine, wl_equivalent

from .oracles import central_difference, relative_error


def _config(readout, output_arity=1, hidden=5, layers=2):
    return GnnConfig(
        model_id="m",
        num_layers=layers,
        hidden_dim=hidden,
        readout=readout,
        relations=("on", "next_to"),
        vertex_label_set=("light", "heavy"),
        output_arity=output_arity,
    )


def _graph():
    return LabelledGraph.build(
        ["a", "b", "c", "d"],
        {"a": {"light"}, "c": {"heavy", "light"}},
        [("a", "on", "b"), ("b", "on", "c"), ("a", "next_to", "d"), ("d", "next_to", "a"), ("c", "on", "a")],
    )


def _targets(readout):
    return {Readout.NODE: ("a",), Readout.EDGE: ("a", "c"), Readout.GRAPH: ()}[readout]


def _plain(instance):
    vertices = [str(v) for v in range(instance.num_vertices)]
    return LabelledGraph.build(vertices, {}, [(str(u), "edge", str(v)) for u, v in directed_edges(instance)])


class TestGraph:
    """Labelled graph construction."""

    def test_edges_are_sorted_and_deduplicated(self):
        g = LabelledGraph.build(["a", "b"], {}, [("b", "r", "a"), ("a", "r", "b"), ("a", "r", "b")])
        assert g.edges == (("a", "r", "b"), ("b", "r", "a"))

    def test_edge_outside_vertex_set(self):
        with pytest.raises(GnnRuntimeError):
            LabelledGraph.build(["a"], {}, [("a", "r", "z")])

    def test_missing_target(self):
        with pytest.raises(GnnRuntimeError) as info:
            _graph().index_of("z")
        assert info.value.category == ErrorCategory.MISSING_TARGET

    def test_canonical_key_ignores_vertex_order(self):
        g = _graph()
        assert g.reordered(["d", "c", "b", "a"]).canonical_key() == g.canonical_key()

    def test_to_networkx(self):
        nxg = _graph().to_networkx()
        assert nxg.number_of_nodes() == 4
        assert nxg.number_of_edges() == 5
        assert nxg.nodes["c"]["labels"] == frozenset({"heavy", "light"})


class TestFeatures:
    """Feature encoding and normalised adjacency."""

    def test_multi_hot_with_bias(self):
        x = encode_features(_graph(), _config(Readout.NODE))
        assert x.shape == (4, 3)
        np.testing.assert_array_equal(x[2], [1.0, 1.0, 1.0])
        np.testing.assert_array_equal(x[1], [0.0, 0.0, 1.0])

    def test_unknown_vertex_label(self):
        g = LabelledGraph.build(["a"], {"a": {"glass"}})
        with pytest.raises(GnnRuntimeError) as info:
            encode_features(g, _config(Readout.NODE))
        assert info.value.category == ErrorCategory.UNKNOWN_LABEL

    def test_unknown_edge_label(self):
        g = LabelledGraph.build(["a", "b"], {}, [("a", "under", "b")])
        with pytest.raises(GnnRuntimeError) as info:
            normalized_adjacency(g, _config(Readout.NODE))
        assert info.value.category == ErrorCategory.UNKNOWN_LABEL

    def test_mean_aggregation_rows(self):
        adjacency = normalized_adjacency(_graph(), _config(Readout.NODE))
        on = adjacency["on"]
        # a receives from c only; b from a; c from b
        assert on[0].sum() == pytest.approx(1.0)
        assert on[3].sum() == 0.0
        assert on[1, 0] == 1.0


class TestForward:
    """Output shapes and ranges."""

    @pytest.mark.parametrize("readout", list(Readout))
    def test_sigmoid_output(self, readout, rng):
        cfg = _config(readout)
        value, trace = forward(cfg, init_params(cfg, rng), _graph(), _targets(readout))
        assert isinstance(value, float)
        assert 0.0 < value < 1.0
        assert trace.readout_input.shape == (cfg.readout_input_dim,)

    def test_softmax_output(self, rng):
        cfg = _config(Readout.GRAPH, output_arity=3)
        value, _ = forward(cfg, init_params(cfg, rng), _graph())
        assert value.shape == (3,)
        assert value.sum() == pytest.approx(1.0)
        assert (value > 0).all()

    def test_zero_parameters_give_one_half(self):
        cfg = _config(Readout.NODE)
        value, _ = forward(cfg, zero_params(cfg), _graph(), ("a",))
        assert value == 0.5

    def test_wrong_target_count(self, rng):
        cfg = _config(Readout.EDGE)
        with pytest.raises(GnnRuntimeError) as info:
            forward(cfg, init_params(cfg, rng), _graph(), ("a",))
        assert info.value.category == ErrorCategory.SHAPE_MISMATCH

    def test_empty_graph_with_graph_readout(self, rng):
        cfg = _config(Readout.GRAPH)
        value, _ = forward(cfg, init_params(cfg, rng), LabelledGraph.build([]))
        assert 0.0 < value < 1.0

    @pytest.mark.parametrize("readout", list(Readout))
    def test_permutation_invariance(self, readout, rng):
        cfg = _config(readout)
        params = init_params(cfg, rng)
        g = _graph()
        value, _ = forward(cfg, params, g, _targets(readout))
        for _ in range(5):
            order = [str(v) for v in rng.permutation(list(g.vertices))]
            permuted, _ = forward(cfg, params, g.reordered(order), _targets(readout))
            assert permuted == pytest.approx(value, abs=1e-12)

    def test_deterministic_initialisation(self):
        cfg = _config(Readout.NODE)
        first = init_params(cfg, np.random.default_rng(9))
        second = init_params(cfg, np.random.default_rng(9))
        for (_, a), (_, b) in zip(first.named_arrays(), second.named_arrays()):
            np.testing.assert_array_equal(a, b)

    def test_parameter_shapes(self, rng):
        cfg = _config(Readout.EDGE, hidden=6, layers=3)
        params = init_params(cfg, rng)
        shapes = dict((name, a.shape) for name, a in params.named_arrays())
        assert shapes["layer0.self"] == (6, 3)
        assert shapes["layer2.rel.on"] == (6, 6)
        assert shapes["readout.hidden_weight"] == (6, 12)
        assert shapes["readout.output_weight"] == (1, 6)
        params.check_matches(cfg)

    def test_shape_check_rejects_other_architecture(self, rng):
        params = init_params(_config(Readout.NODE), rng)
        with pytest.raises(GnnRuntimeError):
            params.check_matches(_config(Readout.NODE, hidden=7))


class TestBackward:
    """Closed-form gradients agree with central differences."""

    @pytest.mark.parametrize(
        "readout,arity,upstream",
        [
            (Readout.NODE, 1, 1.0),
            (Readout.EDGE, 1, -0.7),
            (Readout.GRAPH, 1, 2.0),
            (Readout.GRAPH, 3, [0.3, -1.0, 0.5]),
        ],
    )
    def test_matches_finite_differences(self, readout, arity, upstream, rng):
        cfg = _config(readout, output_arity=arity)
        params = init_params(cfg, rng)
        # move biases off zero
        for _, array in params.named_arrays():
            array += rng.normal(0.0, 0.3, size=array.shape)
        g, targets = _graph(), _targets(readout)
        weights = np.atleast_1d(np.asarray(upstream, dtype=float))

        def objective():
            value, _ = forward(cfg, params, g, targets)
            return float(np.dot(weights, np.atleast_1d(value)))

        _, trace = forward(cfg, params, g, targets)
        grads = backward(cfg, params, trace, upstream)
        for (name, array), (_, grad) in zip(params.named_arrays(), grads.named_arrays()):
            for index in np.ndindex(array.shape):
                numeric = central_difference(objective, array, index, eps=1e-6)
                assert abs(numeric - grad[index]) < 1e-7 or relative_error(numeric, grad[index]) < 1e-4, (name, index)

    def test_upstream_shape_checked(self, rng):
        cfg = _config(Readout.GRAPH, output_arity=3)
        params = init_params(cfg, rng)
        _, trace = forward(cfg, params, _graph())
        with pytest.raises(GnnRuntimeError):
            backward(cfg, params, trace, 1.0)


class TestSnapshot:
    """JSON parameter snapshots."""

    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        cfg = _config(Readout.EDGE)
        params = init_params(cfg, rng)
        path = tmp_path / "params.json"
        save_snapshot(path, {"heavy(b)": -0.123456789}, {"m": params})
        facts, models = load_snapshot(path)
        assert facts == {"heavy(b)": -0.123456789}
        for (_, a), (_, b) in zip(params.named_arrays(), models["m"].named_arrays()):
            np.testing.assert_array_equal(a, b)
        models["m"].check_matches(cfg)

    def test_layout(self, rng):
        cfg = _config(Readout.NODE, layers=1)
        payload = json.loads(snapshot_to_json({}, {"m": init_params(cfg, rng)}))
        assert set(payload) == {"facts", "models"}
        assert set(payload["models"]["m"]) == {"0", "readout"}
        assert set(payload["models"]["m"]["0"]["relations"]) == {"on", "next_to"}

    def test_invalid_json(self):
        with pytest.raises(DataError):
            snapshot_from_json("{not json")

    def test_non_finite_fact(self):
        with pytest.raises(DataError):
            snapshot_from_json('{"facts": {"a": "x"}}')

    def test_missing_readout(self):
        with pytest.raises(DataError):
            snapshot_from_json('{"models": {"m": {"0": {"self": [[1.0]]}}}}')


class TestWeisfeilerLehman:
    """1-WL colour refinement and the limits it places on the networks."""

    def test_ladder_and_joined_triangles_are_indistinguishable(self):
        g0, g1 = (_plain(g) for g in wl_pair())
        assert wl1_refine(g0, 6) == wl1_refine(g1, 6)
        assert wl_equivalent(g0, g1)

    def test_ladder_and_six_cycle_split_after_one_round(self):
        ladder, _ = wl_pair()
        first = wl1_refine(_plain(ladder), 1)
        assert sorted(first.values()) == [2, 4]
        assert first != wl1_refine(_plain(six_cycle()), 1)
        assert not wl_equivalent(_plain(ladder), _plain(six_cycle()))

    def test_six_cycle_and_two_triangles(self):
        triangles = LabelledGraph.build(
            [str(i) for i in range(6)],
            {},
            [(str(u), "edge", str(v)) for a, b in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] for u, v in ((a, b), (b, a))],
        )
        assert wl_equivalent(_plain(six_cycle()), triangles)

    def test_labels_separate_graphs(self):
        g = _plain(six_cycle())
        labelled = LabelledGraph.build(g.vertices, {"0": {"light"}}, g.edges)
        assert not wl_equivalent(g, labelled)

    def test_rounds_must_be_positive(self):
        with pytest.raises(ValueError):
            wl1_refine(_graph(), 0)

    def test_indistinguishable_graphs_get_equal_outputs(self):
        g0, g1 = (_plain(g) for g in wl_pair())
        cfg = GnnConfig("m", num_layers=3, hidden_dim=6, readout=Readout.GRAPH, relations=("edge",))
        rng = np.random.default_rng(2024)
        for _ in range(100):
            params = init_params(cfg, rng)
            out0, _ = forward(cfg, params, g0)
            out1, _ = forward(cfg, params, g1)
            assert out0 == pytest.approx(out1, abs=1e-9)
