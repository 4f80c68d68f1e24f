"""
First-order optimizers over a ParamStore.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable

import numpy as np

from ..gnn.params import ParamTensors
from .store import ParamStore


@dataclass
class StoreGradient:
    """dL/d(fact logit) per param id and dL/dθ per model."""

    facts: Dict[str, float] = field(default_factory=dict)
    models: Dict[str, ParamTensors] = field(default_factory=dict)

    def add_(self, other: "StoreGradient", scale: float = 1.0) -> "StoreGradient":
        for pid, v in other.facts.items():
            self.facts[pid] = self.facts.get(pid, 0.0) + scale * v
        for mid, g in other.models.items():
            if mid in self.models:
                self.models[mid].add_(g, scale)
            else:
                self.models[mid] = g.map(lambda a: a * scale)
        return self

    def norm(self) -> float:
        total = sum(v * v for v in self.facts.values())
        total += sum(g.sum_of_squares() for g in self.models.values())
        return float(np.sqrt(total))

    def scale_(self, factor: float) -> "StoreGradient":
        self.facts = {pid: v * factor for pid, v in self.facts.items()}
        for g in self.models.values():
            for _, a in g.named_arrays():
                a *= factor
        return self

    def clip_(self, max_norm: float) -> float:
        """Rescale to at most ``max_norm``; returns the norm before clipping."""
        norm = self.norm()
        if max_norm > 0 and norm > max_norm:
            self.scale_(max_norm / norm)
        return norm


class Optimizer:
    name = "optimizer"

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, store: ParamStore, grad: StoreGradient) -> None:
        for pid, g in grad.facts.items():
            store.fact_logits[pid] = float(store.fact_logits[pid] - self._update(("fact", pid), np.float64(g)))
        for mid, g in grad.models.items():
            params = store.model(mid)
            for (name, p), (_, gp) in zip(params.named_arrays(), g.named_arrays()):
                p -= self._update(("model", mid, name), gp)

    def _update(self, key: Hashable, g):
        raise NotImplementedError

    def settings(self) -> Dict[str, float | str]:
        return {"optimizer": self.name, "learning_rate": self.learning_rate}


class SGD(Optimizer):
    name = "sgd"

    def _update(self, key: Hashable, g):
        return self.learning_rate * g


class Adam(Optimizer):
    name = "adam"

    def __init__(self, learning_rate: float = 0.01, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: Dict[Hashable, np.ndarray] = {}
        self._v: Dict[Hashable, np.ndarray] = {}

    def step(self, store: ParamStore, grad: StoreGradient) -> None:
        self.t += 1
        super().step(store, grad)

    def _update(self, key: Hashable, g):
        m = self._m.get(key, 0.0)
        v = self._v.get(key, 0.0)
        m = self.beta1 * m + (1.0 - self.beta1) * g
        v = self.beta2 * v + (1.0 - self.beta2) * g * g
        self._m[key], self._v[key] = m, v
        m_hat = m / (1.0 - self.beta1**self.t)
        v_hat = v / (1.0 - self.beta2**self.t)
        return self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def settings(self) -> Dict[str, float | str]:
        return {**super().settings(), "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


OPTIMIZERS = {"adam": Adam, "sgd": SGD}


def make_optimizer(name: str, learning_rate: float) -> Optimizer:
    try:
        return OPTIMIZERS[name](learning_rate=learning_rate)
    except KeyError:
        raise ValueError(f"unknown optimizer '{name}' (choose from {', '.join(sorted(OPTIMIZERS))})") from None
