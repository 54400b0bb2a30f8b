"""Library instances: doubled cycles, rings of K4 blocks and nested cycle gadgets.

Every generator returns a valid half-integral solution.  Costs are either
unit weights on the support edges (``costs="unit"``) or Euclidean distances
between random points of the unit square rounded to 1e-9, in which case the
full distance matrix is attached.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from ._validation import check_rng
from .instance import Edge, HalfIntegralSolution

KINDS = ("doubled-cycle", "k4-chain", "nested-cycle", "two-level")
SIZE_BOUNDS = {"doubled-cycle": (3, 200), "k4-chain": (2, 50), "nested-cycle": (0, 4), "two-level": (0, 0)}


def _finish(n: int, pairs: list[tuple[int, int, float]], costs: str, random_state) -> HalfIntegralSolution:
    if costs == "unit":
        edges = tuple(Edge(min(u, v), max(u, v), x, 1.0) for u, v, x in pairs)
        return HalfIntegralSolution(n=n, edges=edges)
    if costs != "euclidean":
        raise ValueError(f"costs must be 'unit' or 'euclidean', got {costs!r}")
    rng = check_rng(random_state)
    pts = rng.random((n, 2))
    M = np.round(np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)), 9)
    np.fill_diagonal(M, 0.0)
    edges = tuple(Edge(min(u, v), max(u, v), x, float(M[u, v])) for u, v, x in pairs)
    return HalfIntegralSolution(n=n, edges=edges, matrix=M)


def doubled_cycle(n: int, costs: str = "unit", random_state=None) -> HalfIntegralSolution:
    """Cycle on ``n`` vertices with every edge at value 1."""
    _check_size("doubled-cycle", n)
    pairs = [(i, (i + 1) % n, 1.0) for i in range(n)]
    return _finish(n, pairs, costs, random_state)


def k4_chain(blocks: int, costs: str = "unit", random_state=None) -> HalfIntegralSolution:
    """K4 blocks (all edges at 1/2) joined in a ring, two edges per neighbor.

    With two blocks the four spare stubs are matched straight across.
    """
    _check_size("k4-chain", blocks)
    pairs = []
    for b in range(blocks):
        base = 4 * b
        pairs += [(base + i, base + j, 0.5) for i, j in combinations(range(4), 2)]
    if blocks == 2:
        pairs += [(i, i + 4, 0.5) for i in range(4)]
    else:
        for b in range(blocks):
            nxt = 4 * ((b + 1) % blocks)
            pairs += [(4 * b + 2, nxt, 0.5), (4 * b + 3, nxt + 1, 0.5)]
    return _finish(4 * blocks, pairs, costs, random_state)


class _Builder:
    """Grows a graph out of gadgets exposing two stubs towards each side."""

    def __init__(self):
        self.n = 0
        self.pairs: list[tuple[int, int, float]] = []

    def k4(self):
        base = self.n
        self.n += 4
        self.pairs += [(base + i, base + j, 0.5) for i, j in combinations(range(4), 2)]
        # (stubs towards the previous node, stubs towards the next node)
        return (base, base + 1), (base + 2, base + 3)

    def cycle(self, parts):
        """Chain sub-gadgets; the outer stubs are crossed so that each side of
        the result touches both ends of the chain."""
        for (_, right), (left, _) in zip(parts, parts[1:]):
            self.pairs += [(right[0], left[0], 0.5), (right[1], left[1], 0.5)]
        first, last = parts[0][0], parts[-1][1]
        return (first[0], last[0]), (first[1], last[1])

    def nested(self, depth: int, width: int = 2):
        if depth == 0:
            return self.k4()
        return self.cycle([self.nested(depth - 1, width) for _ in range(width)])

    def close(self, parts):
        """Root ring: q1, parts..., q2 with q1 and q2 joined at value 1."""
        q1, q2 = self.n, self.n + 1
        self.n += 2
        for (_, right), (left, _) in zip(parts, parts[1:]):
            self.pairs += [(right[0], left[0], 0.5), (right[1], left[1], 0.5)]
        left, right = parts[0][0], parts[-1][1]
        self.pairs += [(q1, left[0], 0.5), (q1, left[1], 0.5)]
        self.pairs += [(q2, right[0], 0.5), (q2, right[1], 0.5)]
        self.pairs.append((q1, q2, 1.0))


def nested_cycle(depth: int, costs: str = "unit", random_state=None) -> HalfIntegralSolution:
    """Cycle cuts nested ``depth`` deep, each made of two sub-gadgets, with
    K4 blocks at the bottom, closed into a root ring by a value-1 edge."""
    _check_size("nested-cycle", depth)
    b = _Builder()
    b.close([b.nested(depth)])
    return _finish(b.n, b.pairs, costs, random_state)


def two_level(size: int = 0, costs: str = "unit", random_state=None) -> HalfIntegralSolution:
    """A cycle cut of three K4 blocks next to a cycle cut of two, on a root ring."""
    _check_size("two-level", size)
    b = _Builder()
    f = b.cycle([b.k4(), b.k4(), b.k4()])
    g = b.cycle([b.k4(), b.k4()])
    b.close([f, g])
    return _finish(b.n, b.pairs, costs, random_state)


def _check_size(kind: str, size: int):
    lo, hi = SIZE_BOUNDS[kind]
    if not isinstance(size, (int, np.integer)) or not lo <= size <= hi:
        raise ValueError(f"{kind} size must be an integer in [{lo}, {hi}], got {size!r}")


GENERATORS = {
    "doubled-cycle": doubled_cycle,
    "k4-chain": k4_chain,
    "nested-cycle": nested_cycle,
    "two-level": two_level,
}


def generate(kind: str, size: int, costs: str = "unit", random_state=None) -> HalfIntegralSolution:
    if kind not in GENERATORS:
        raise ValueError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    return GENERATORS[kind](size, costs=costs, random_state=random_state)


def library(costs: str = "unit", random_state=0) -> dict[str, HalfIntegralSolution]:
    """The fixed set of acceptance instances, keyed by name."""
    rng = check_rng(random_state)
    out = {}
    for n in range(3, 13):
        out[f"doubled-cycle-{n}"] = doubled_cycle(n, costs, rng)
    for blocks in range(2, 6):
        out[f"k4-chain-{blocks}"] = k4_chain(blocks, costs, rng)
    for depth in (2, 3):
        out[f"nested-cycle-{depth}"] = nested_cycle(depth, costs, rng)
    out["two-level"] = two_level(0, costs, rng)
    return out
