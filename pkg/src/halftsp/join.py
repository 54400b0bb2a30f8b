"""Minimum-cost O-joins via perfect matching, and Eulerian shortcutting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx

from .instance import DistanceOracle


@dataclass(frozen=True)
class JoinSolution:
    pairs: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]  # consecutive vertices along the realizing paths
    cost: float

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "cost": self.cost}


def min_ojoin(metric: DistanceOracle, odd) -> JoinSolution:
    """Cheapest pairing of ``odd`` under the metric (blossom matching)."""
    odd = sorted(int(v) for v in odd)
    if len(odd) % 2:
        raise ValueError(f"O-join needs an even vertex set, got {len(odd)} vertices")
    if not odd:
        return JoinSolution((), (), 0.0)
    if len(odd) == 2:
        pairs = [(odd[0], odd[1])]
    else:
        g = nx.Graph()
        g.add_nodes_from(odd)
        for i, a in enumerate(odd):
            for b in odd[i + 1 :]:
                g.add_edge(a, b, weight=metric(a, b))
        pairs = sorted(tuple(sorted(p)) for p in nx.min_weight_matching(g))
    edges = []
    for a, b in pairs:
        path = metric.path(a, b)
        edges.extend(zip(path, path[1:]))
    cost = math.fsum(metric(a, b) for a, b in pairs)
    return JoinSolution(tuple(pairs), tuple(edges), cost)


def shortcut(tree_edges, join: JoinSolution, n: int, start: int = 0) -> list[int]:
    """Eulerian circuit of the tree edges plus matched pairs from ``start``,
    keeping each vertex at its first visit."""
    g = nx.MultiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((int(a), int(b)) for a, b in tree_edges)
    g.add_edges_from(join.pairs)
    if not nx.is_connected(g):
        raise AssertionError("tree plus join is disconnected")
    if any(d % 2 for _, d in g.degree()):
        raise AssertionError("tree plus join has odd-degree vertices")
    seen = set()
    tour = []
    for u, _ in nx.eulerian_circuit(g, source=start):
        if u not in seen:
            seen.add(u)
            tour.append(u)
    if len(tour) != n:
        raise AssertionError("shortcut tour misses vertices")
    return tour


def tour_cost(tour, metric: DistanceOracle) -> float:
    return math.fsum(metric(a, b) for a, b in zip(tour, tour[1:] + tour[:1]))


def collapse_tour(tour, origin) -> list[int]:
    """Map a tour over split vertices back to the original vertex ids."""
    out = []
    for v in tour:
        o = origin[v]
        if o not in out:
            out.append(o)
    return out
