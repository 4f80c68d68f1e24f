"""
Thread-safe memo table for graph neural fact evaluations.
"""
from __future__ import annotations

import threading
from typing import Dict, Hashable, Mapping, Optional, Protocol, Tuple

import numpy as np

from ..gnn.config import GnnConfig
from ..gnn.graph import LabelledGraph
from ..gnn.network import ForwardTrace, Output, backward, forward
from ..gnn.params import ParamTensors

EvalKey = Tuple[str, Hashable, Tuple[str, ...]]


class ParameterSource(Protocol):
    """What the engine reads from a parameter store."""

    fact_logits: Mapping[str, float]

    def model(self, model_id: str) -> ParamTensors: ...


class GnnEvaluator:
    """
    Runs forward passes keyed by (model id, canonical graph, targets).

    With ``use_cache`` off every request runs the network again; the last
    trace per key is kept either way so gradients can be propagated back.
    """

    def __init__(self, configs: Mapping[str, GnnConfig], store: ParameterSource, use_cache: bool = True):
        self.configs = configs
        self.store = store
        self.use_cache = use_cache
        self.evaluations = 0
        self._memo: Dict[EvalKey, Tuple[Output, ForwardTrace]] = {}
        self._lock = threading.Lock()

    def evaluate(self, model_id: str, graph: LabelledGraph, targets: Tuple[str, ...]) -> Tuple[EvalKey, Output]:
        key = (model_id, graph.canonical_key(), targets)
        if self.use_cache:
            with self._lock:
                hit = self._memo.get(key)
            if hit is not None:
                return key, hit[0]
        computed = forward(self.configs[model_id], self.store.model(model_id), graph, targets)
        with self._lock:
            self.evaluations += 1
            if self.use_cache:
                # a concurrent evaluation of the same key may have landed first
                computed = self._memo.setdefault(key, computed)
            else:
                self._memo[key] = computed
        return key, computed[0]

    def backpropagate(self, upstream: Mapping[EvalKey, np.ndarray]) -> Dict[str, ParamTensors]:
        """Sum of parameter gradients over every key, weighted by its upstream gradient."""
        grads: Dict[str, ParamTensors] = {}
        for key in sorted(upstream, key=repr):
            model_id = key[0]
            cfg = self.configs[model_id]
            params = self.store.model(model_id)
            _, trace = self._memo[key]
            g = backward(cfg, params, trace, upstream[key])
            if model_id in grads:
                grads[model_id].add_(g)
            else:
                grads[model_id] = g
        return grads

    def output_for(self, key: EvalKey) -> Optional[Output]:
        hit = self._memo.get(key)
        return None if hit is None else hit[0]
