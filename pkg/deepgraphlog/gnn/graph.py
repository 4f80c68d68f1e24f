"""
Directed multi-relational graphs with multi-label vertices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Sequence, Tuple

import networkx as nx

from ..errors import ErrorCategory, GnnRuntimeError

Edge = Tuple[str, str, str]  # (source, label, target)


@dataclass(frozen=True)
class LabelledGraph:
    """
    ``vertices`` fixes the vertex order used for feature rows; ``vertex_labels``
    is aligned with it. ``edges`` is kept sorted and duplicate-free.
    """

    vertices: Tuple[str, ...]
    vertex_labels: Tuple[FrozenSet[str], ...]
    edges: Tuple[Edge, ...] = ()
    _index: Dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.vertex_labels) != len(self.vertices):
            raise GnnRuntimeError(
                "vertex_labels must align with vertices",
                category=ErrorCategory.SHAPE_MISMATCH,
            )
        index = {v: i for i, v in enumerate(self.vertices)}
        if len(index) != len(self.vertices):
            raise GnnRuntimeError("duplicate vertex", category=ErrorCategory.SHAPE_MISMATCH)
        for src, _label, dst in self.edges:
            if src not in index or dst not in index:
                raise GnnRuntimeError(
                    f"edge ({src}, {dst}) has an endpoint outside the vertex set",
                    category=ErrorCategory.SHAPE_MISMATCH,
                )
        object.__setattr__(self, "edges", tuple(sorted(set(self.edges))))
        self._index.update(index)

    @classmethod
    def build(
        cls,
        vertices: Sequence[str],
        labels: Mapping[str, Iterable[str]] | None = None,
        edges: Iterable[Edge] = (),
    ) -> "LabelledGraph":
        labels = labels or {}
        return cls(
            vertices=tuple(vertices),
            vertex_labels=tuple(frozenset(labels.get(v, ())) for v in vertices),
            edges=tuple(edges),
        )

    def __len__(self) -> int:
        return len(self.vertices)

    def index_of(self, vertex: str) -> int:
        try:
            return self._index[vertex]
        except KeyError:
            raise GnnRuntimeError(
                f"target vertex {vertex!r} is not in the graph",
                category=ErrorCategory.MISSING_TARGET,
                token=vertex,
            ) from None

    def labels_of(self, vertex: str) -> FrozenSet[str]:
        return self.vertex_labels[self.index_of(vertex)]

    def edge_labels(self) -> Tuple[str, ...]:
        return tuple(sorted({label for _, label, _ in self.edges}))

    def reordered(self, order: Sequence[str]) -> "LabelledGraph":
        """Same graph with vertices listed in ``order``."""
        if sorted(order) != sorted(self.vertices):
            raise GnnRuntimeError("reordering must be a permutation", category=ErrorCategory.SHAPE_MISMATCH)
        return LabelledGraph(
            vertices=tuple(order),
            vertex_labels=tuple(self.labels_of(v) for v in order),
            edges=self.edges,
        )

    def canonical_key(self) -> tuple:
        """Hashable identity of the graph, independent of vertex listing order."""
        labelled = tuple(sorted((v, tuple(sorted(ls))) for v, ls in zip(self.vertices, self.vertex_labels)))
        return (labelled, self.edges)

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        for v, ls in zip(self.vertices, self.vertex_labels):
            g.add_node(v, labels=ls)
        for src, label, dst in self.edges:
            g.add_edge(src, dst, key=label, label=label)
        return g
