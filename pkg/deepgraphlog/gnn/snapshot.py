"""
JSON parameter snapshots.

Layout::

    {"facts": {param_id: logit},
     "models": {model_id: {"0": {"self": M, "relations": {label: M}}, ...,
                           "readout": {"hidden_weight": M, "hidden_bias": v,
                                       "output_weight": M, "output_bias": v}}}}

Floats are written with Python's shortest round-tripping repr, so a
save/load cycle is bit-exact.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from ..errors import DataError, ErrorCategory, GnnRuntimeError
from .params import LayerParams, ParamTensors, ReadoutParams


def model_to_dict(params: ParamTensors) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    for i, layer in enumerate(params.layers):
        data[str(i)] = {
            "self": layer.self_weight.tolist(),
            "relations": {label: layer.relations[label].tolist() for label in sorted(layer.relations)},
        }
    ro = params.readout
    data["readout"] = {
        "hidden_weight": ro.hidden_weight.tolist(),
        "hidden_bias": ro.hidden_bias.tolist(),
        "output_weight": ro.output_weight.tolist(),
        "output_bias": ro.output_bias.tolist(),
    }
    return data


def _matrix(value: Any, where: str, ndim: int) -> np.ndarray:
    try:
        array = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: not a numeric array") from exc
    if array.ndim != ndim:
        raise GnnRuntimeError(f"{where}: expected {ndim} dimensions", category=ErrorCategory.SHAPE_MISMATCH)
    if not np.isfinite(array).all():
        raise GnnRuntimeError(f"{where}: non-finite entry", category=ErrorCategory.NON_FINITE)
    return array


def model_from_dict(model_id: str, data: Mapping[str, Any]) -> ParamTensors:
    layer_keys = sorted((k for k in data if k != "readout"), key=lambda k: (not k.isdigit(), k.zfill(8)))
    if layer_keys != [str(i) for i in range(len(layer_keys))]:
        raise DataError(f"model '{model_id}': layer keys must be 0..n-1")
    layers = []
    for key in layer_keys:
        entry = data[key]
        layers.append(
            LayerParams(
                _matrix(entry["self"], f"{model_id}.{key}.self", 2),
                {
                    label: _matrix(m, f"{model_id}.{key}.{label}", 2)
                    for label, m in entry.get("relations", {}).items()
                },
            )
        )
    ro = data.get("readout")
    if ro is None:
        raise DataError(f"model '{model_id}': missing readout")
    readout = ReadoutParams(
        _matrix(ro["hidden_weight"], f"{model_id}.readout.hidden_weight", 2),
        _matrix(ro["hidden_bias"], f"{model_id}.readout.hidden_bias", 1),
        _matrix(ro["output_weight"], f"{model_id}.readout.output_weight", 2),
        _matrix(ro["output_bias"], f"{model_id}.readout.output_bias", 1),
    )
    return ParamTensors(layers, readout)


def snapshot_to_json(facts: Mapping[str, float], models: Mapping[str, ParamTensors]) -> str:
    payload = {
        "facts": {pid: float(facts[pid]) for pid in sorted(facts)},
        "models": {mid: model_to_dict(models[mid]) for mid in sorted(models)},
    }
    return json.dumps(payload, indent=1, allow_nan=False) + "\n"


def snapshot_from_json(text: str) -> Tuple[Dict[str, float], Dict[str, ParamTensors]]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"parameter snapshot is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError("parameter snapshot must be a JSON object")
    facts = {}
    for pid, value in payload.get("facts", {}).items():
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise DataError(f"fact logit for {pid} is not a finite number")
        facts[pid] = float(value)
    models = {mid: model_from_dict(mid, data) for mid, data in payload.get("models", {}).items()}
    return facts, models


def save_snapshot(path: str | Path, facts: Mapping[str, float], models: Mapping[str, ParamTensors]) -> None:
    Path(path).write_text(snapshot_to_json(facts, models), encoding="utf-8")


def load_snapshot(path: str | Path) -> Tuple[Dict[str, float], Dict[str, ParamTensors]]:
    return snapshot_from_json(Path(path).read_text(encoding="utf-8"))
