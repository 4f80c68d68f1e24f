"""
Weight tensors of one relational message-passing model.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Tuple

import numpy as np

from ..errors import ErrorCategory, GnnRuntimeError
from .config import GnnConfig


@dataclass
class LayerParams:
    self_weight: np.ndarray  # (hidden, in)
    relations: Dict[str, np.ndarray] = field(default_factory=dict)  # label -> (hidden, in)


@dataclass
class ReadoutParams:
    hidden_weight: np.ndarray  # (hidden, readout_in)
    hidden_bias: np.ndarray  # (hidden,)
    output_weight: np.ndarray  # (out, hidden)
    output_bias: np.ndarray  # (out,)


@dataclass
class ParamTensors:
    layers: List[LayerParams]
    readout: ReadoutParams

    def named_arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        """Every tensor under a stable name, in a fixed order. Arrays are live views."""
        for i, layer in enumerate(self.layers):
            yield f"layer{i}.self", layer.self_weight
            for label in sorted(layer.relations):
                yield f"layer{i}.rel.{label}", layer.relations[label]
        yield "readout.hidden_weight", self.readout.hidden_weight
        yield "readout.hidden_bias", self.readout.hidden_bias
        yield "readout.output_weight", self.readout.output_weight
        yield "readout.output_bias", self.readout.output_bias

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ParamTensors":
        return ParamTensors(
            layers=[
                LayerParams(fn(layer.self_weight), {k: fn(v) for k, v in layer.relations.items()})
                for layer in self.layers
            ],
            readout=ReadoutParams(
                fn(self.readout.hidden_weight),
                fn(self.readout.hidden_bias),
                fn(self.readout.output_weight),
                fn(self.readout.output_bias),
            ),
        )

    def copy(self) -> "ParamTensors":
        return self.map(np.copy)

    def zeros_like(self) -> "ParamTensors":
        return self.map(np.zeros_like)

    def add_(self, other: "ParamTensors", scale: float = 1.0) -> "ParamTensors":
        for (name, mine), (other_name, theirs) in zip(self.named_arrays(), other.named_arrays()):
            if name != other_name or mine.shape != theirs.shape:
                raise GnnRuntimeError(
                    f"cannot accumulate {other_name} into {name}",
                    category=ErrorCategory.SHAPE_MISMATCH,
                )
            mine += scale * theirs
        return self

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for _, a in self.named_arrays())

    def sum_of_squares(self) -> float:
        return float(sum(np.vdot(a, a) for _, a in self.named_arrays()))

    def size(self) -> int:
        return sum(a.size for _, a in self.named_arrays())

    def check_matches(self, cfg: GnnConfig) -> None:
        """Raise if the tensor shapes do not fit ``cfg``."""
        expected = dict(_shapes(cfg))
        actual = {name: a.shape for name, a in self.named_arrays()}
        if expected != actual:
            missing = sorted(set(expected) ^ set(actual)) or sorted(
                n for n in expected if expected[n] != actual[n]
            )
            raise GnnRuntimeError(
                f"parameters of model '{cfg.model_id}' do not match its architecture ({missing[0]})",
                category=ErrorCategory.SHAPE_MISMATCH,
                token=cfg.model_id,
            )


def _shapes(cfg: GnnConfig) -> Iterator[Tuple[str, Tuple[int, ...]]]:
    fan_in = cfg.input_dim
    for i in range(cfg.num_layers):
        yield f"layer{i}.self", (cfg.hidden_dim, fan_in)
        for label in sorted(cfg.relations):
            yield f"layer{i}.rel.{label}", (cfg.hidden_dim, fan_in)
        fan_in = cfg.hidden_dim
    yield "readout.hidden_weight", (cfg.hidden_dim, cfg.readout_input_dim)
    yield "readout.hidden_bias", (cfg.hidden_dim,)
    yield "readout.output_weight", (cfg.output_dim, cfg.hidden_dim)
    yield "readout.output_bias", (cfg.output_dim,)


def _uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(cols)
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_params(cfg: GnnConfig, rng: np.random.Generator) -> ParamTensors:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases start at zero."""
    layers = []
    fan_in = cfg.input_dim
    for _ in range(cfg.num_layers):
        self_weight = _uniform(rng, cfg.hidden_dim, fan_in)
        relations = {label: _uniform(rng, cfg.hidden_dim, fan_in) for label in cfg.relations}
        layers.append(LayerParams(self_weight, relations))
        fan_in = cfg.hidden_dim
    readout = ReadoutParams(
        hidden_weight=_uniform(rng, cfg.hidden_dim, cfg.readout_input_dim),
        hidden_bias=np.zeros(cfg.hidden_dim),
        output_weight=_uniform(rng, cfg.output_dim, cfg.hidden_dim),
        output_bias=np.zeros(cfg.output_dim),
    )
    return ParamTensors(layers, readout)


def zero_params(cfg: GnnConfig) -> ParamTensors:
    return init_params(cfg, np.random.default_rng(0)).map(np.zeros_like)
