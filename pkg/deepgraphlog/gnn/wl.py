"""
1-WL colour refinement over LabelledGraph, following message direction.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from hashlib import blake2b
from typing import Dict, List, Tuple

from .graph import LabelledGraph


def _digest(value: object) -> str:
    return blake2b(repr(value).encode("utf-8"), digest_size=16).hexdigest()


def wl1_refine(g: LabelledGraph, rounds: int = 3) -> Counter:
    """
    Colour histogram after ``rounds`` refinement rounds, or earlier once the
    partition stops splitting.

    Initial colour is the vertex label set; each round a vertex's colour
    becomes a hash of its colour and the sorted multiset of
    (edge label, source colour) over its incoming edges. Colours are content
    hashes, so histograms of different graphs are comparable.
    """
    if rounds < 1:
        raise ValueError("rounds must be positive")

    incoming: Dict[str, List[Tuple[str, str]]] = defaultdict(list)
    for src, label, dst in g.edges:
        incoming[dst].append((label, src))

    colours = {v: _digest(tuple(sorted(ls))) for v, ls in zip(g.vertices, g.vertex_labels)}
    classes = len(set(colours.values()))
    for _ in range(rounds):
        colours = {
            v: _digest((colours[v], tuple(sorted((label, colours[u]) for label, u in incoming[v]))))
            for v in g.vertices
        }
        refined = len(set(colours.values()))
        if refined == classes:
            break
        classes = refined
    return Counter(colours.values())


def wl_equivalent(g1: LabelledGraph, g2: LabelledGraph, rounds: int | None = None) -> bool:
    """True when 1-WL cannot tell the two graphs apart."""
    limit = rounds or max(len(g1), len(g2), 1)
    return wl1_refine(g1, limit) == wl1_refine(g2, limit)
