"""
Dataset specs for the experiments.

Specs are stored as YAML (preferred) or JSON next to this module, one file
per experiment, and parsed with PyYAML's safe_load.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from ..errors import DataError, UnknownExperimentError

EXPERIMENTS = ("e1", "e2", "e3", "e4")

_TRAINING_DEFAULTS: Dict[str, Any] = {
    "epochs": 30,
    "learning_rate": 0.02,
    "optimizer": "adam",
    "batch_size": None,
    "layers": 2,
    "hidden": 8,
}


def _specs_dir() -> Path:
    return Path(__file__).parent / "specs"


@dataclass(frozen=True)
class DatasetSpec:
    experiment: str
    size: Mapping[str, int]
    seed: int = 0
    parameters: Mapping[str, Any] = field(default_factory=dict)
    training: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise UnknownExperimentError(f"unknown experiment '{self.experiment}'", token=self.experiment)
        for split in ("train", "test"):
            count = self.size.get(split)
            if not isinstance(count, int) or count <= 0:
                raise DataError(f"{self.experiment}: size.{split} must be a positive integer, got {count!r}")
        object.__setattr__(self, "training", {**_TRAINING_DEFAULTS, **self.training})

    def param(self, name: str, default: Any = None) -> Any:
        return self.parameters.get(name, default)

    def with_seed(self, seed: int) -> "DatasetSpec":
        return DatasetSpec(self.experiment, dict(self.size), seed, dict(self.parameters), dict(self.training))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "size": dict(self.size),
            "seed": self.seed,
            "parameters": dict(self.parameters),
            "training": dict(self.training),
        }


def _load_file(path: Path) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise DataError(f"spec file {path} must contain a mapping at top-level")
    return data


def _merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(dict(merged[key]), value)
        elif value is not None:
            merged[key] = value
    return merged


def load_dataset_spec(name: str, overrides: Optional[Mapping[str, Any]] = None) -> DatasetSpec:
    """
    Load the spec for experiment ``name``.

    Resolution order:
    1) <name>.yaml
    2) <name>.yml
    3) <name>.json

    ``overrides`` are merged key by key into the file contents (nested
    mappings merge, ``None`` values are ignored).
    """
    specs_dir = _specs_dir()
    candidates = [specs_dir / f"{name}{suffix}" for suffix in (".yaml", ".yml", ".json")]
    path = next((c for c in candidates if c.exists()), None)
    if name not in EXPERIMENTS or path is None:
        raise UnknownExperimentError(f"unknown experiment '{name}' (known: {', '.join(EXPERIMENTS)})", token=name)

    data = _merge(_load_file(path), overrides or {})
    try:
        return DatasetSpec(
            experiment=data.get("experiment", name),
            size={k: v for k, v in dict(data.get("size") or {}).items()},
            seed=int(data.get("seed", 0)),
            parameters=dict(data.get("parameters") or {}),
            training=dict(data.get("training") or {}),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"spec file {path}: {exc}") from exc
