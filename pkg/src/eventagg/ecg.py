"""Event correlation graph export.

Events become graph nodes; an undirected edge connects two events that
share an equal, present value on at least one of the configured features.
The graph is written in DOT, so any standard graph tooling can pick it
up. This is a post-processing demo surface: building detection logic on
top of the graph is out of scope here.
"""

from __future__ import annotations

from typing import Sequence

from .model import NormalizedEvent


def build_ecg(
    events: Sequence[NormalizedEvent], features: Sequence[str]
) -> tuple[list[str], list[tuple[str, str]]]:
    """Nodes and deduplicated edges of the correlation graph.

    Edges are reported as id pairs ordered within the pair and sorted
    overall, so the output is deterministic.
    """
    nodes = [e.event_id for e in events]
    index: dict[tuple[str, object], list[int]] = {}
    for i, event in enumerate(events):
        for feature in features:
            value = event.features.get(feature)
            if value is None:
                continue
            index.setdefault((feature, value), []).append(i)
    edges: set[tuple[str, str]] = set()
    for group in index.values():
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                ia, ib = group[a], group[b]
                pair = (nodes[ia], nodes[ib]) if nodes[ia] <= nodes[ib] else (nodes[ib], nodes[ia])
                edges.add(pair)
    return nodes, sorted(edges)


def write_dot(nodes: Sequence[str], edges: Sequence[tuple[str, str]], path) -> None:
    """Write the graph in DOT format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("graph ecg {\n")
        for node in nodes:
            fh.write(f'  "{node}";\n')
        for a, b in edges:
            fh.write(f'  "{a}" -- "{b}";\n')
        fh.write("}\n")
