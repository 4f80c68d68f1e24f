"""
Relational graph-convolution forward pass and its closed-form backward pass.

Layer update (messages flow source -> target only):

    H' = relu(H W0^T + sum_l A_l H W_l^T),   A_l[v, u] = #(u -l-> v) / max(1, indeg_l(v))

Readout: node / edge (concatenation) / graph (vertex mean), then a one-hidden-layer
perceptron with sigmoid (one output) or softmax (k outputs).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Union

import numpy as np
from scipy.special import expit, softmax

from ..errors import ErrorCategory, GnnRuntimeError
from .config import GnnConfig, Readout
from .graph import LabelledGraph
from .params import ParamTensors

Output = Union[float, np.ndarray]


def encode_features(g: LabelledGraph, cfg: GnnConfig) -> np.ndarray:
    """Multi-hot vertex labels plus a constant bias column; one row per vertex."""
    column = {label: i for i, label in enumerate(cfg.vertex_label_set)}
    x = np.zeros((len(g), cfg.input_dim))
    x[:, -1] = 1.0
    for row, labels in enumerate(g.vertex_labels):
        for label in labels:
            col = column.get(label)
            if col is None:
                raise GnnRuntimeError(
                    f"vertex label '{label}' is not an input label of model '{cfg.model_id}'",
                    category=ErrorCategory.UNKNOWN_LABEL,
                    token=label,
                )
            x[row, col] = 1.0
    return x


def normalized_adjacency(g: LabelledGraph, cfg: GnnConfig) -> Dict[str, np.ndarray]:
    n = len(g)
    adjacency = {label: np.zeros((n, n)) for label in cfg.relations}
    for src, label, dst in g.edges:
        if label not in adjacency:
            raise GnnRuntimeError(
                f"edge label '{label}' is not a relation of model '{cfg.model_id}'",
                category=ErrorCategory.UNKNOWN_LABEL,
                token=label,
            )
        adjacency[label][g.index_of(dst), g.index_of(src)] += 1.0
    for a in adjacency.values():
        a /= np.maximum(1.0, a.sum(axis=1, keepdims=True))
    return adjacency


@dataclass
class ForwardTrace:
    """Activations retained by forward() for backward()."""

    adjacency: Dict[str, np.ndarray]
    hidden: List[np.ndarray]  # hidden[0] = features, hidden[l+1] = relu(pre[l])
    pre: List[np.ndarray]
    target_rows: List[int]
    readout_input: np.ndarray
    readout_pre: np.ndarray
    readout_hidden: np.ndarray
    logits: np.ndarray
    output: np.ndarray


def _readout_input(cfg: GnnConfig, h: np.ndarray, rows: Sequence[int]) -> np.ndarray:
    if cfg.readout is Readout.GRAPH:
        if h.shape[0] == 0:
            return np.zeros(cfg.hidden_dim)
        return h.mean(axis=0)
    return np.concatenate([h[r] for r in rows])


def forward(
    cfg: GnnConfig,
    params: ParamTensors,
    g: LabelledGraph,
    targets: Sequence[str] = (),
) -> tuple[Output, ForwardTrace]:
    """
    Evaluate the network on ``g`` for the given target vertices.

    Returns a probability (``output_arity`` 1) or a distribution over the
    head group, plus the trace backward() needs.
    """
    expected = cfg.readout.target_count if cfg.readout is not None else len(targets)
    if len(targets) != expected:
        raise GnnRuntimeError(
            f"model '{cfg.model_id}' expects {expected} targets, got {len(targets)}",
            category=ErrorCategory.SHAPE_MISMATCH,
            token=cfg.model_id,
        )
    rows = [g.index_of(t) for t in targets]
    adjacency = normalized_adjacency(g, cfg)

    h = encode_features(g, cfg)
    hidden = [h]
    pre = []
    for layer in params.layers:
        z = h @ layer.self_weight.T
        for label, a in adjacency.items():
            z = z + a @ (h @ layer.relations[label].T)
        h = np.maximum(z, 0.0)
        pre.append(z)
        hidden.append(h)

    r = _readout_input(cfg, h, rows)
    ro = params.readout
    a1 = ro.hidden_weight @ r + ro.hidden_bias
    h1 = np.maximum(a1, 0.0)
    logits = ro.output_weight @ h1 + ro.output_bias
    output = expit(logits) if cfg.output_arity == 1 else softmax(logits)

    trace = ForwardTrace(adjacency, hidden, pre, rows, r, a1, h1, logits, output)
    value: Output = float(output[0]) if cfg.output_arity == 1 else output
    return value, trace


def backward(
    cfg: GnnConfig,
    params: ParamTensors,
    trace: ForwardTrace,
    upstream: Union[float, Sequence[float], np.ndarray],
) -> ParamTensors:
    """
    Gradient of ``upstream . output`` with respect to every parameter tensor.

    ``upstream`` is a scalar for sigmoid models and a vector over the head
    group for softmax models.
    """
    if len(trace.pre) != len(params.layers) or trace.hidden[-1].shape[1:] != (cfg.hidden_dim,):
        raise GnnRuntimeError(
            f"trace does not belong to model '{cfg.model_id}'",
            category=ErrorCategory.SHAPE_MISMATCH,
            token=cfg.model_id,
        )
    g_out = np.atleast_1d(np.asarray(upstream, dtype=np.float64))
    if g_out.shape != trace.output.shape:
        raise GnnRuntimeError(
            f"upstream gradient has shape {g_out.shape}, output has {trace.output.shape}",
            category=ErrorCategory.SHAPE_MISMATCH,
            token=cfg.model_id,
        )

    y = trace.output
    if cfg.output_arity == 1:
        d_logits = g_out * y * (1.0 - y)
    else:
        d_logits = y * (g_out - np.dot(g_out, y))

    grads = params.zeros_like()
    ro, gro = params.readout, grads.readout
    gro.output_weight[:] = np.outer(d_logits, trace.readout_hidden)
    gro.output_bias[:] = d_logits
    d_a1 = (ro.output_weight.T @ d_logits) * (trace.readout_pre > 0)
    gro.hidden_weight[:] = np.outer(d_a1, trace.readout_input)
    gro.hidden_bias[:] = d_a1
    d_r = ro.hidden_weight.T @ d_a1

    h_last = trace.hidden[-1]
    d_h = np.zeros_like(h_last)
    if cfg.readout is Readout.GRAPH:
        if h_last.shape[0]:
            d_h += d_r / h_last.shape[0]
    else:
        width = cfg.hidden_dim
        for i, row in enumerate(trace.target_rows):
            d_h[row] += d_r[i * width:(i + 1) * width]

    for l in range(len(params.layers) - 1, -1, -1):
        layer, glayer = params.layers[l], grads.layers[l]
        h_in = trace.hidden[l]
        d_z = d_h * (trace.pre[l] > 0)
        glayer.self_weight[:] = d_z.T @ h_in
        d_h = d_z @ layer.self_weight
        for label, a in trace.adjacency.items():
            glayer.relations[label][:] = d_z.T @ (a @ h_in)
            d_h = d_h + a.T @ (d_z @ layer.relations[label])

    return grads
