"""
Learnable parameters: fact logits and per-model network weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
from scipy.special import expit, logit

from logging_setup import Component, get_logger

from ..errors import ErrorCategory, GnnRuntimeError
from ..frontend.program import Program
from ..frontend.validate import validate
from ..gnn.params import ParamTensors, init_params
from ..gnn.snapshot import load_snapshot, save_snapshot, snapshot_to_json

logger = get_logger(Component.TRAINER)

# keeps t(0.0) / t(1.0) facts trainable
_INIT_CLAMP = 1e-6


@dataclass
class ParamStore:
    fact_logits: Dict[str, float] = field(default_factory=dict)
    model_params: Dict[str, ParamTensors] = field(default_factory=dict)

    @classmethod
    def for_program(cls, program: Program, seed: int = 0) -> "ParamStore":
        store = cls()
        store.ensure(program, np.random.default_rng(seed))
        return store

    def ensure(self, program: Program, rng: np.random.Generator) -> "ParamStore":
        """Add initial values for every learnable fact and used model not yet present."""
        if not program.checked:
            program = validate(program)
        for fact in program.learnable_facts:
            pid = fact.param_id or str(fact.atom)
            if pid not in self.fact_logits:
                p = min(1.0 - _INIT_CLAMP, max(_INIT_CLAMP, fact.prob))
                self.fact_logits[pid] = float(logit(p))
        for model_id in sorted(program.model_configs):
            cfg = program.model_configs[model_id]
            if cfg.readout is None:
                continue  # declared but never used by a schema
            existing = self.model_params.get(model_id)
            if existing is None:
                self.model_params[model_id] = init_params(cfg, rng)
            else:
                existing.check_matches(cfg)
        return self

    def model(self, model_id: str) -> ParamTensors:
        try:
            return self.model_params[model_id]
        except KeyError:
            raise GnnRuntimeError(
                f"no parameters for model '{model_id}'",
                category=ErrorCategory.SHAPE_MISMATCH,
                token=model_id,
            ) from None

    def fact_probability(self, param_id: str) -> float:
        return float(expit(self.fact_logits[param_id]))

    def fact_probabilities(self) -> Dict[str, float]:
        return {pid: self.fact_probability(pid) for pid in sorted(self.fact_logits)}

    def named_arrays(self) -> Iterator[Tuple[Tuple[str, ...], np.ndarray]]:
        for model_id in sorted(self.model_params):
            for name, array in self.model_params[model_id].named_arrays():
                yield (model_id, name), array

    def is_finite(self) -> bool:
        return all(np.isfinite(v) for v in self.fact_logits.values()) and all(
            p.is_finite() for p in self.model_params.values()
        )

    def copy(self) -> "ParamStore":
        return ParamStore(dict(self.fact_logits), {k: v.copy() for k, v in self.model_params.items()})

    def to_json(self) -> str:
        return snapshot_to_json(self.fact_logits, self.model_params)

    def save(self, path: str | Path) -> None:
        save_snapshot(path, self.fact_logits, self.model_params)
        logger.debug("parameters saved", path=str(path), facts=len(self.fact_logits), models=len(self.model_params))

    @classmethod
    def load(cls, path: str | Path, program: Optional[Program] = None) -> "ParamStore":
        facts, models = load_snapshot(path)
        store = cls(facts, models)
        if program is not None:
            store.ensure(program, np.random.default_rng(0))
        return store
