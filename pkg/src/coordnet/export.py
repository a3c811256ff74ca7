"""GraphML and DOT exports of coordination graphs (non-isolated users only)."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .analysis import edge_counts, weighted_degree
from .classify import MILITARY, PATRIOT, QANON
from .induce import CoordinationGraph

CLASS_COLORS = {MILITARY: "blue", PATRIOT: "red", QANON: "green"}
UNCLASSIFIED_COLOR = "gray"


def to_networkx(graph: CoordinationGraph, assignments: Mapping[str, Iterable[str]] | None = None) -> nx.Graph:
    assignments = assignments or {}
    wdeg, ndeg = weighted_degree(graph), edge_counts(graph)
    g = nx.Graph()
    for i in graph.non_isolated():
        u = graph.user_ids[i]
        g.add_node(
            u,
            user_class_list=";".join(sorted(assignments.get(u, ()))),
            weighted_degree=wdeg[u],
            degree=ndeg[u],
        )
    for a, b, w in graph.edges():
        g.add_edge(a, b, weight=w)
    return g


def write_graphml(graph: CoordinationGraph, path: str | Path, assignments=None) -> None:
    nx.write_graphml(to_networkx(graph, assignments), str(path))


def node_color(classes: Iterable[str], labels: Sequence[str]) -> str:
    for lab in labels:
        if lab in classes and lab in CLASS_COLORS:
            return CLASS_COLORS[lab]
    return UNCLASSIFIED_COLOR


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_dot(
    graph: CoordinationGraph,
    path: str | Path,
    assignments: Mapping[str, Iterable[str]] | None = None,
    labels: Sequence[str] = (MILITARY, PATRIOT, QANON),
) -> None:
    """Undirected DOT file; node width tracks weighted degree, pen width edge weight."""
    assignments = assignments or {}
    wdeg = weighted_degree(graph)
    nodes = [graph.user_ids[i] for i in graph.non_isolated()]
    top_deg = max((wdeg[u] for u in nodes), default=1.0) or 1.0
    edges = list(graph.edges())
    top_w = max((w for _, _, w in edges), default=1.0) or 1.0
    lines = ["graph coordination {", "  node [shape=circle, style=filled, label=\"\"];"]
    for u in nodes:
        color = node_color(set(assignments.get(u, ())), labels)
        width = 0.2 + 0.8 * wdeg[u] / top_deg
        lines.append(
            f"  {_quote(u)} [fillcolor={color}, width={width:.3f}, tooltip={_quote(u)}];"
        )
    for a, b, w in edges:
        lines.append(f"  {_quote(a)} -- {_quote(b)} [penwidth={0.5 + 4.5 * w / top_w:.3f}, tooltip=\"{w:.6f}\"];")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
