"""Unit-capacity max-flow on undirected multigraphs and exact min-cut listing.

Every edge of the multigraph carries capacity one.  All minimum ``s``-``t``
cuts are the residual-closed vertex sets containing ``s`` but not ``t``;
listing them for ``s = 0`` and every ``t`` yields every global minimum cut.
"""
from __future__ import annotations

from collections import deque


def adjacency(n: int, ends) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e, (a, b) in enumerate(ends):
        adj[int(a)].append((e, int(b)))
        adj[int(b)].append((e, int(a)))
    return adj


def _residual(e: int, u: int, ends, flow) -> int:
    # flow[e] is oriented from ends[e][0] to ends[e][1]
    return 1 - flow[e] if u == ends[e][0] else 1 + flow[e]


def max_flow(n: int, ends, s: int, t: int, adj=None) -> tuple[int, list[int]]:
    """Edmonds-Karp augmentation; returns (value, oriented flow per edge)."""
    if adj is None:
        adj = adjacency(n, ends)
    ends = [(int(a), int(b)) for a, b in ends]
    flow = [0] * len(ends)
    value = 0
    while True:
        prev: list[tuple[int, int] | None] = [None] * n
        seen = [False] * n
        seen[s] = True
        queue = deque([s])
        while queue and not seen[t]:
            u = queue.popleft()
            for e, v in adj[u]:
                if not seen[v] and _residual(e, u, ends, flow) > 0:
                    seen[v] = True
                    prev[v] = (e, u)
                    queue.append(v)
        if not seen[t]:
            return value, flow
        v = t
        while v != s:
            e, u = prev[v]
            flow[e] += 1 if u == ends[e][0] else -1
            v = u
        value += 1


def _reach(n: int, adj, ends, flow, reverse: bool) -> list[frozenset[int]]:
    ends = [(int(a), int(b)) for a, b in ends]
    out = []
    for start in range(n):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for e, v in adj[u]:
                # forward arc u->v usable; for the reverse closure we walk v->u arcs backwards
                r = _residual(e, v, ends, flow) if reverse else _residual(e, u, ends, flow)
                if r > 0 and v not in seen:
                    seen.add(v)
                    stack.append(v)
        out.append(frozenset(seen))
    return out


def min_st_cuts(n: int, ends, s: int, t: int, adj=None):
    """Yield every minimum s-t cut as the frozenset of its s-side vertices."""
    if adj is None:
        adj = adjacency(n, ends)
    _, flow = max_flow(n, ends, s, t, adj)
    reach = _reach(n, adj, ends, flow, reverse=False)
    coreach = _reach(n, adj, ends, flow, reverse=True)
    inside = reach[s]
    outside = coreach[t]
    if inside & outside:
        raise AssertionError("residual graph still has an s-t path")
    undecided = sorted(set(range(n)) - inside - outside)
    yield from _closures(inside, outside, undecided, reach, coreach)


def _closures(inside, outside, undecided, reach, coreach):
    rest = [v for v in undecided if v not in inside and v not in outside]
    if not rest:
        yield inside
        return
    v = rest[0]
    yield from _closures(inside | reach[v], outside, rest[1:], reach, coreach)
    yield from _closures(inside, outside | coreach[v], rest[1:], reach, coreach)


def global_min_cut_value(n: int, ends) -> int:
    if n < 2:
        return 0
    adj = adjacency(n, ends)
    return min(max_flow(n, ends, 0, t, adj)[0] for t in range(1, n))


def all_min_cuts(n: int, ends, value: int | None = None) -> tuple[int, list[frozenset[int]]]:
    """All global minimum cuts, each as the side not containing vertex 0.

    Returns ``(cut value, sorted list of sides)``.  Exact: every minimum cut
    separates 0 from some t and is then a minimum 0-t cut.
    """
    adj = adjacency(n, ends)
    values = [max_flow(n, ends, 0, t, adj)[0] for t in range(1, n)]
    lam = min(values) if value is None else value
    if min(values) != lam:
        raise ValueError(f"global min cut is {min(values)}, expected {lam}")
    everything = frozenset(range(n))
    found: set[frozenset[int]] = set()
    for t, val in zip(range(1, n), values):
        if val != lam:
            continue
        for side in min_st_cuts(n, ends, 0, t, adj):
            found.add(everything - side)
    return lam, sorted(found, key=lambda s: (len(s), sorted(s)))


def boundary(ends, side) -> list[int]:
    side = set(side)
    return [e for e, (a, b) in enumerate(ends) if (int(a) in side) != (int(b) in side)]

