"""
Architecture description of one graph neural model.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class Readout(str, Enum):
    NODE = "node"
    EDGE = "edge"
    GRAPH = "graph"

    @property
    def target_count(self) -> int:
        return {Readout.NODE: 1, Readout.EDGE: 2, Readout.GRAPH: 0}[self]

    @classmethod
    def for_targets(cls, count: int) -> Optional["Readout"]:
        return {1: cls.NODE, 2: cls.EDGE, 0: cls.GRAPH}.get(count)


@dataclass(frozen=True)
class GnnConfig:
    """
    Relational message-passing stack: ``num_layers`` rounds of per-relation
    mean aggregation with hidden width ``hidden_dim``, then a perceptron
    readout with sigmoid (``output_arity`` 1) or softmax (``output_arity`` k).

    ``relations`` and ``vertex_label_set`` are filled in from the schema's γ
    when the program is validated.
    """

    model_id: str
    num_layers: int = 2
    hidden_dim: int = 8
    readout: Optional[Readout] = None
    relations: Tuple[str, ...] = ()
    vertex_label_set: Tuple[str, ...] = ()
    output_arity: int = 1

    @property
    def input_dim(self) -> int:
        # multi-hot labels plus a constant bias slot
        return len(self.vertex_label_set) + 1

    @property
    def readout_input_dim(self) -> int:
        return self.hidden_dim * (2 if self.readout is Readout.EDGE else 1)

    @property
    def output_dim(self) -> int:
        return 1 if self.output_arity == 1 else self.output_arity

    def signature(self) -> tuple:
        return (
            self.num_layers,
            self.hidden_dim,
            self.readout,
            self.relations,
            self.vertex_label_set,
            self.output_arity,
        )
