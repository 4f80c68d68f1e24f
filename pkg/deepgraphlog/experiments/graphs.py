"""
Small undirected graphs for the graph-classification experiments, with
brute-force structure detectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import List, Sequence, Tuple

import networkx as nx
import numpy as np

CLASSES = ("class_0", "class_1", "class_2")
TEMPLATES = ("cycle_3", "cycle_4", "clique_4")


@dataclass(frozen=True)
class GraphInstance:
    instance_id: str
    num_vertices: int
    edges: Tuple[Tuple[int, int], ...]  # undirected, u < v

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_vertices))
        g.add_edges_from(self.edges)
        return g

    @property
    def templates(self) -> Tuple[str, ...]:
        found = []
        if has_triangle(self):
            found.append("cycle_3")
        if has_four_cycle(self):
            found.append("cycle_4")
        if has_four_clique(self):
            found.append("clique_4")
        return tuple(found)

    @property
    def label(self) -> str:
        return classify(self)


def _adjacency(g: GraphInstance) -> List[set]:
    adj = [set() for _ in range(g.num_vertices)]
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def has_triangle(g: GraphInstance) -> bool:
    adj = _adjacency(g)
    return any(adj[u] & adj[v] for u, v in g.edges)


def has_four_cycle(g: GraphInstance) -> bool:
    # u-a-v-b-u exists iff two distinct vertices share two neighbours
    adj = _adjacency(g)
    return any(len(adj[u] & adj[v]) >= 2 for u, v in combinations(range(g.num_vertices), 2))


def has_four_clique(g: GraphInstance) -> bool:
    adj = _adjacency(g)
    for quad in combinations(range(g.num_vertices), 4):
        if all(b in adj[a] for a, b in combinations(quad, 2)):
            return True
    return False


def classify(g: GraphInstance) -> str:
    """class_0 with a 4-cycle, class_1 with a triangle but no 4-cycle, class_2 otherwise."""
    if has_four_cycle(g):
        return "class_0"
    if has_triangle(g):
        return "class_1"
    return "class_2"


def _normalize(edges) -> Tuple[Tuple[int, int], ...]:
    return tuple(sorted({(min(u, v), max(u, v)) for u, v in edges if u != v}))


def wl_pair() -> Tuple[GraphInstance, GraphInstance]:
    """Two 1-WL-equivalent graphs on six vertices: a 2x3 ladder (4-cycles) and two joined triangles."""
    ladder = GraphInstance("wl-ladder", 6, _normalize([(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)]))
    triangles = GraphInstance("wl-triangles", 6, _normalize([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (1, 4)]))
    return ladder, triangles


def six_cycle() -> GraphInstance:
    return GraphInstance("six-cycle", 6, _normalize([(i, (i + 1) % 6) for i in range(6)]))


def _random_tree(n: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    return [(int(rng.integers(0, v)), v) for v in range(1, n)]


def _pairs_at_distance(g: nx.Graph, d: int) -> List[Tuple[int, int]]:
    lengths = dict(nx.all_pairs_shortest_path_length(g, cutoff=d))
    return sorted((u, v) for u in lengths for v, dist in lengths[u].items() if u < v and dist == d)


def random_graph(
    instance_id: str,
    target: str,
    rng: np.random.Generator,
    min_vertices: int = 6,
    max_vertices: int = 10,
    extra_triangle: bool = False,
    clique_rate: float = 0.0,
) -> GraphInstance:
    """
    Random connected graph aimed at ``target``: a random tree, closed into a
    4-cycle (class_0) or a triangle (class_1) by one extra edge. The label
    is always recomputed by the detectors, so callers should read ``label``.

    ``extra_triangle`` and ``clique_rate`` add structure to class_0 graphs
    only. Every 4-clique contains a 4-cycle, so a clique can never appear
    outside class_0.
    """
    n = int(rng.integers(min_vertices, max_vertices + 1))
    edges = _random_tree(n, rng)
    g = nx.Graph(edges)
    if target == "class_0":
        pairs = _pairs_at_distance(g, 3)
        if not pairs:
            # stars have diameter 2; a path always has a pair at distance 3
            edges = [(v, v + 1) for v in range(n - 1)]
            pairs = _pairs_at_distance(nx.Graph(edges), 3)
        edges.append(pairs[int(rng.integers(len(pairs)))])
        if clique_rate and rng.random() < clique_rate and n >= 4:
            quad = rng.choice(n, size=4, replace=False)
            edges += [(int(a), int(b)) for a, b in combinations(quad, 2)]
        if extra_triangle:
            pairs = _pairs_at_distance(nx.Graph(edges), 2)
            if pairs:
                edges.append(pairs[int(rng.integers(len(pairs)))])
    elif target == "class_1":
        pairs = _pairs_at_distance(g, 2)
        edges.append(pairs[int(rng.integers(len(pairs)))])
    return GraphInstance(instance_id, n, _normalize(edges))


def balanced_graphs(
    prefix: str,
    count: int,
    rng: np.random.Generator,
    **options,
) -> List[GraphInstance]:
    """``count`` graphs cycling through the three classes; labels come from the detectors."""
    return [random_graph(f"{prefix}-{i}", CLASSES[i % 3], rng, **options) for i in range(count)]


def directed_edges(g: GraphInstance) -> Sequence[Tuple[int, int]]:
    return [e for u, v in g.edges for e in ((u, v), (v, u))]
