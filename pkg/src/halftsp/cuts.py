"""Minimum cuts of the support graph and the hierarchy of critical sets.

The hierarchy is built by replaying the contraction loop of the algorithm:
repeatedly pick a minimal proper tight set that no tight set crosses and
whose interior avoids the designated edge, classify it as a degree cut or a
cycle cut, and contract it.  What remains at the end is a doubled cycle, the
root.  Sets are always stored over original vertex ids and half-edge ids
never change, so every edge role below refers to support-graph half-edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from . import _flow
from .instance import SupportGraph

LEAF, DEGREE, CYCLE, ROOT = "leaf", "degree", "cycle", "root"


class HierarchyError(AssertionError):
    """The tight-set structure contradicts the min-cut facts (bug or bad input)."""


@dataclass(frozen=True)
class TightSet:
    """A vertex set whose boundary is a minimum cut (four half-edges)."""

    members: frozenset[int]
    boundary: frozenset[int]

    def is_proper(self, n: int) -> bool:
        return 2 <= len(self.members) <= n - 2

    def sort_key(self):
        return (len(self.members), sorted(self.members))


def _canonical(side: frozenset[int], n: int) -> frozenset[int]:
    return frozenset(range(n)) - side if 0 in side else side


def crosses(a, b, n: int) -> bool:
    """True iff a-b, b-a, a&b and the complement of a|b are all nonempty."""
    a = a.members if isinstance(a, TightSet) else frozenset(a)
    b = b.members if isinstance(b, TightSet) else frozenset(b)
    return bool(a - b) and bool(b - a) and bool(a & b) and len(a | b) < n


def enumerate_min_cuts(G: SupportGraph) -> list[TightSet]:
    """Every minimum cut once, reported by the side avoiding vertex 0."""
    lam, sides = _flow.all_min_cuts(G.n, G.edge_list())
    if lam != 4:
        raise ValueError(f"support graph has min cut {lam}, expected 4")
    return [TightSet(s, G.boundary(s)) for s in sides]


def min_cuts_of(n_nodes: int, ends) -> tuple[int, list[frozenset[int]]]:
    """Min-cut value and sides (avoiding node 0) of an arbitrary multigraph."""
    return _flow.all_min_cuts(n_nodes, ends)


@dataclass
class HierarchyNode:
    id: int
    kind: str
    members: frozenset[int]
    children: tuple[int, ...] = ()
    parent: int | None = None
    boundary: frozenset[int] = frozenset()
    internal: tuple[int, ...] = ()
    # cycle: gaps[0] joins the outside to children[0], gaps[-1] children[-1] to the outside;
    # root: gaps[i] joins children[i] and children[(i + 1) % k]
    gaps: tuple[tuple[int, ...], ...] = ()
    higher: frozenset[int] = frozenset()
    step: int = -1

    @property
    def is_cycle(self) -> bool:
        return self.kind in (CYCLE, ROOT)


@dataclass(frozen=True)
class EdgeRole:
    edge: int
    s_e: int
    s_u: int
    s_v: int
    top: bool
    last_cuts: tuple[frozenset[int], frozenset[int]] | None
    companion: int | None

    @property
    def bottom(self) -> bool:
        return not self.top


@dataclass(eq=False)
class CutHierarchy:
    graph: SupportGraph
    nodes: list[HierarchyNode]
    root: int
    order: list[int]
    roles: list[EdgeRole] = field(default_factory=list)
    ambiguous: list[int] = field(default_factory=list)

    # ---- navigation -------------------------------------------------
    def ancestors(self, node: int) -> list[int]:
        out = [node]
        while self.nodes[out[-1]].parent is not None:
            out.append(self.nodes[out[-1]].parent)
        return out

    def critical(self) -> list[HierarchyNode]:
        """Contracted critical sets, in contraction order."""
        return [self.nodes[i] for i in self.order]

    def owner(self, e: int) -> int:
        """The node whose sampled sub-tree decides whether ``e`` is used."""
        return self.roles[e].s_e

    def partners(self, node: int) -> tuple[tuple[int, int], tuple[int, int]]:
        nd = self.nodes[node]
        if nd.kind != CYCLE:
            raise ValueError("cycle partners exist only for cycle cuts")
        return tuple(nd.gaps[0]), tuple(nd.gaps[-1])

    def companions(self, node: int) -> list[tuple[int, int]]:
        nd = self.nodes[node]
        if nd.kind == CYCLE:
            return [tuple(g) for g in nd.gaps[1:-1]]
        if nd.kind == ROOT:
            return [tuple(g) for g in nd.gaps]
        return []

    def goes_higher(self, e: int, node: int) -> bool:
        return e in self.nodes[node].higher

    # ---- cuts ---------------------------------------------------------
    def _tight(self, side) -> TightSet:
        side = _canonical(frozenset(side), self.graph.n)
        return TightSet(side, self.graph.boundary(side))

    def node_cuts(self, node: int) -> list[TightSet]:
        """Min cuts represented by one node: its boundary, or every pair of
        gaps of its cycle."""
        nd = self.nodes[node]
        if nd.kind in (LEAF, DEGREE):
            return [self._tight(nd.members)]
        ch = [self.nodes[c].members for c in nd.children]
        out = []
        for i, j in combinations(range(len(nd.gaps)), 2):
            arc = ch[i:j] if nd.kind == CYCLE else ch[i + 1 : j + 1]
            out.append(self._tight(frozenset().union(*arc)))
        return out

    def all_min_cuts(self) -> list[TightSet]:
        seen = {}
        for nd in self.nodes:
            for t in self.node_cuts(nd.id):
                seen.setdefault(t.boundary, t)
        return sorted(seen.values(), key=TightSet.sort_key)

    def min_cuts_containing(self, e: int) -> list[TightSet]:
        """Degree cuts with ``e`` on the boundary plus, for every cycle through
        ``e``, each cycle cut using ``e``."""
        found = {}
        for nd in self.nodes:
            if nd.kind in (LEAF, DEGREE):
                if e in nd.boundary:
                    t = self._tight(nd.members)
                    found[t.boundary] = t
                continue
            hits = [i for i, g in enumerate(nd.gaps) if e in g]
            if not hits:
                continue
            ch = [self.nodes[c].members for c in nd.children]
            for i, j in combinations(range(len(nd.gaps)), 2):
                if i in hits or j in hits:
                    arc = ch[i:j] if nd.kind == CYCLE else ch[i + 1 : j + 1]
                    t = self._tight(frozenset().union(*arc))
                    found[t.boundary] = t
        return sorted(found.values(), key=TightSet.sort_key)

    def last_cuts(self, e: int) -> tuple[frozenset[int], frozenset[int]]:
        """The two min cuts (as half-edge sets) holding ``e`` and edges that
        go higher, just before its lowest common critical set is contracted."""
        if e in (self.graph.e_plus,):
            raise ValueError("the designated unit edge lies on no critical cut")
        return self.roles[e].last_cuts

    def cut_members(self, cut: frozenset[int]) -> frozenset[int]:
        """Recover the vertex side (avoiding vertex 0) of a min cut edge set."""
        n = self.graph.n
        ends = self.graph.edge_list()
        adj = [[] for _ in range(n)]
        for h, (a, b) in enumerate(ends):
            if h not in cut:
                adj[a].append(b)
                adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return frozenset(range(n)) - frozenset(seen)

    # ---- export -------------------------------------------------------
    def to_dict(self) -> dict:
        nodes = []
        for nd in self.nodes:
            item = {
                "id": nd.id,
                "kind": nd.kind,
                "members": sorted(nd.members),
                "parent": nd.parent,
            }
            if nd.kind != LEAF:
                item["children"] = list(nd.children)
                item["internal_edges"] = list(nd.internal)
            if nd.kind != ROOT:
                item["boundary"] = sorted(nd.boundary)
                item["goes_higher"] = sorted(nd.higher)
            if nd.is_cycle:
                item["gaps"] = [list(g) for g in nd.gaps]
            if nd.kind == CYCLE:
                item["cycle_partners"] = [list(p) for p in self.partners(nd.id)]
            nodes.append(item)
        edges = []
        for r in self.roles:
            item = {
                "edge": r.edge,
                "ends": [int(x) for x in self.graph.ends[r.edge]],
                "role": "top" if r.top else "bottom",
                "S_e": r.s_e,
                "S_u": r.s_u,
                "S_v": r.s_v,
                "companion": r.companion,
            }
            if r.last_cuts is not None:
                item["last_cuts"] = [sorted(c) for c in r.last_cuts]
            edges.append(item)
        return {
            "n": self.graph.n,
            "e_plus": self.graph.e_plus,
            "root": self.root,
            "contraction_order": list(self.order),
            "nodes": nodes,
            "edges": edges,
            "ambiguous_goes_higher": list(self.ambiguous),
        }

    def to_dot(self) -> str:
        lines = ["digraph hierarchy {"]
        for nd in self.nodes:
            if nd.kind == LEAF:
                label = str(min(nd.members))
            else:
                label = f"{nd.kind} {nd.id}\\n|S|={len(nd.members)}"
            shape = {"leaf": "point", "degree": "box", "cycle": "ellipse", "root": "doublecircle"}[nd.kind]
            lines.append(f'  n{nd.id} [label="{label}", shape={shape}];')
        for nd in self.nodes:
            for c in nd.children:
                lines.append(f"  n{nd.id} -> n{c};")
        lines.append("}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# construction


def _cycle_order(positions, ends_pos, outside: int | None, first_vertex):
    """Order the nodes of a doubled cycle; return (order, gaps) or None.

    ``ends_pos`` maps half-edge id -> (pos a, pos b) restricted to the view.
    ``outside`` is the contracted complement (cycle cut) or None (root).
    """
    nodes = list(positions) + ([outside] if outside is not None else [])
    nbr = {p: {} for p in nodes}
    for h, (a, b) in ends_pos.items():
        nbr[a].setdefault(b, []).append(h)
        nbr[b].setdefault(a, []).append(h)
    for p in nodes:
        if len(nbr[p]) != 2 or any(len(hs) != 2 for hs in nbr[p].values()):
            return None
    if outside is not None:
        start = outside
    else:
        start = min(positions, key=first_vertex)
    a, b = sorted(nbr[start], key=first_vertex)
    walk = [start, a]
    while len(walk) < len(nodes):
        cur, prev = walk[-1], walk[-2]
        nxt = [q for q in nbr[cur] if q != prev]
        walk.append(nxt[0])
    if len(set(walk)) != len(nodes) or start not in nbr[walk[-1]]:
        return None
    closed = walk + [start]
    gaps = [tuple(sorted(nbr[closed[i]][closed[i + 1]])) for i in range(len(walk))]
    order = walk[1:] if outside is not None else walk
    return order, gaps


def build_hierarchy(G: SupportGraph, check: bool = True) -> CutHierarchy:
    """Replay the contraction loop on ``G`` and classify every half-edge."""
    n = G.n
    ends = G.edge_list()
    ep_u, ep_v = ends[G.e_plus]
    nodes = [HierarchyNode(id=v, kind=LEAF, members=frozenset([v]), boundary=G.boundary([v])) for v in range(n)]
    current = list(range(n))
    where = list(range(n))  # original vertex -> position in current
    order = []

    while True:
        k = len(current)
        first = [min(nodes[c].members) for c in current]
        view = {h: (where[a], where[b]) for h, (a, b) in enumerate(ends) if where[a] != where[b]}
        hs = sorted(view)
        lam, sides = _flow.all_min_cuts(k, [view[h] for h in hs])
        if lam != 4:
            raise HierarchyError(f"contracted graph has min cut {lam}")
        every = frozenset(range(k))
        tight = [s for s in sides]
        tight_all = set(tight) | {every - s for s in tight}

        def bsize(side):
            return sum((a in side) != (b in side) for a, b in view.values())

        crossed = set()
        for i, j in combinations(range(len(tight)), 2):
            s, t = tight[i], tight[j]
            if crosses(s, t, k):
                crossed.update((i, j))
                corners = (s - t, t - s, s & t, every - (s | t))
                if any(bsize(c) != 4 for c in corners):
                    raise HierarchyError("corner of two crossing tight sets is not tight")
                bs = {h for h in hs if (view[h][0] in s) != (view[h][1] in s)}
                bt = {h for h in hs if (view[h][0] in t) != (view[h][1] in t)}
                if bs & bt:
                    raise HierarchyError("crossing tight sets share a boundary edge")

        ep_side = {where[ep_u], where[ep_v]}
        cands = []
        for i, s in enumerate(tight):
            if i in crossed:
                continue
            for side in (s, every - s):
                if 2 <= len(side) <= k - 2 and not ep_side <= side:
                    cands.append(side)
        if not cands:
            break
        minimal = [s for s in cands if not any(t < s for t in cands)]

        def members_of(side):
            return frozenset().union(*(nodes[current[p]].members for p in side))

        S = min(minimal, key=lambda s: sorted(members_of(s)))
        inner_tight = any(t < S and len(t) >= 2 for t in tight_all)
        nid = len(nodes)
        members = members_of(S)
        internal = tuple(h for h in hs if view[h][0] in S and view[h][1] in S)
        outside = -1
        sub = {}
        for h in hs:
            a, b = view[h]
            if a in S or b in S:
                sub[h] = (a if a in S else outside, b if b in S else outside)
        # cycle cut iff S plus its contracted complement is a doubled cycle
        got = _cycle_order(sorted(S), sub, outside, lambda p: first[p] if p >= 0 else -1)
        if inner_tight and got is None:
            raise HierarchyError(f"cycle cut {sorted(members)} is not a doubled cycle")
        node = HierarchyNode(
            id=nid,
            kind=CYCLE if got is not None else DEGREE,
            members=members,
            boundary=G.boundary(members),
            internal=internal,
            step=len(order),
        )
        if got is not None:
            pos_order, gaps = got
            node.children = tuple(current[p] for p in pos_order)
            node.gaps = gaps
        else:
            node.children = tuple(sorted((current[p] for p in S), key=lambda c: min(nodes[c].members)))
        for c in node.children:
            nodes[c].parent = nid
        nodes.append(node)
        order.append(nid)
        current = [c for p, c in enumerate(current) if p not in S] + [nid]
        for pos, c in enumerate(current):
            for v in nodes[c].members:
                where[v] = pos

    # the remaining graph is the root cycle
    k = len(current)
    view = {h: (where[a], where[b]) for h, (a, b) in enumerate(ends) if where[a] != where[b]}
    first = [min(nodes[c].members) for c in current]
    got = _cycle_order(list(range(k)), view, None, lambda p: first[p])
    if got is None or k < 3:
        raise HierarchyError("final contracted graph is not a doubled cycle of length >= 3")
    pos_order, gaps = got
    rid = len(nodes)
    root = HierarchyNode(
        id=rid,
        kind=ROOT,
        members=frozenset(range(n)),
        children=tuple(current[p] for p in pos_order),
        internal=tuple(sorted(view)),
        gaps=gaps,
        step=len(order),
    )
    for c in root.children:
        nodes[c].parent = rid
    nodes.append(root)
    for nd in nodes:
        if nd.parent is not None:
            parent = nodes[nd.parent]
            nd.higher = nd.boundary & parent.boundary if parent.kind != ROOT else frozenset()

    H = CutHierarchy(graph=G, nodes=nodes, root=rid, order=order)
    H.roles = [_edge_role(H, h) for h in range(G.m)]
    if check:
        problems = check_hierarchy(H)
        if problems:
            raise HierarchyError("; ".join(problems))
    return H


def _edge_role(H: CutHierarchy, h: int) -> EdgeRole:
    u, v = (int(x) for x in H.graph.ends[h])
    up_u = H.ancestors(u)
    up_v = set(H.ancestors(v))
    i = next(i for i, a in enumerate(up_u) if a in up_v)
    s_e = up_u[i]
    s_u = up_u[i - 1]
    up_v_list = H.ancestors(v)
    s_v = up_v_list[up_v_list.index(s_e) - 1]
    nd = H.nodes[s_e]
    companion = None
    if nd.is_cycle:
        gi = next(j for j, g in enumerate(nd.gaps) if h in g)
        gap = nd.gaps[gi]
        companion = next(x for x in gap if x != h)
        if nd.kind == CYCLE:
            last = (frozenset(gap + nd.gaps[0]), frozenset(gap + nd.gaps[-1]))
        else:
            last = (H.nodes[s_u].boundary, H.nodes[s_v].boundary)
    else:
        last = (H.nodes[s_u].boundary, H.nodes[s_v].boundary)
    if h == H.graph.e_plus:
        last = None
    return EdgeRole(edge=h, s_e=s_e, s_u=s_u, s_v=s_v, top=not nd.is_cycle, last_cuts=last, companion=companion)


def check_hierarchy(H: CutHierarchy) -> list[str]:
    """Structural facts every hierarchy must satisfy; returns violations."""
    out = []
    G = H.graph
    root = H.nodes[H.root]
    if len(root.children) < 3 or any(len(g) != 2 for g in root.gaps):
        out.append("root is not a doubled cycle of length >= 3")
    critical = [nd for nd in H.nodes if nd.kind in (DEGREE, CYCLE)]
    for nd in critical:
        if G.e_plus in nd.boundary or G.e_plus_twin in nd.boundary:
            out.append(f"designated edge on critical cut {nd.id}")
        if len(nd.boundary) != 4:
            out.append(f"critical set {nd.id} has boundary size {len(nd.boundary)}")
    sets = [nd for nd in H.nodes if nd.kind != ROOT]
    for a, b in combinations(sets, 2):
        if len(a.boundary & b.boundary) > 2:
            out.append(f"critical cuts {a.id},{b.id} share more than two edges")
    for nd in critical:
        for c in nd.children:
            if len(H.nodes[c].boundary - set(nd.internal)) >= 2 and nd.kind != CYCLE:
                out.append(f"child {c} has two edges leaving degree cut {nd.id}")
        for anc in H.ancestors(nd.id)[1:]:
            A = H.nodes[anc]
            if A.kind == ROOT:
                break
            if len(nd.boundary & A.boundary) == 2 and A.kind != CYCLE:
                out.append(f"nested critical sets {nd.id} in {anc} share two edges but {anc} is not a cycle cut")
    partner_pairs = {}
    for nd in H.nodes:
        if nd.kind == CYCLE:
            for p in H.partners(nd.id):
                key = frozenset(p)
                if key in partner_pairs:
                    out.append(f"edges {sorted(key)} are cycle partners twice")
                partner_pairs[key] = nd.id
    for nd in sets:
        if nd.kind == LEAF or nd.parent is None:
            continue
        low = [h for h in nd.boundary if H.roles[h].bottom and h not in nd.higher]
        if len(low) == 2 and nd.higher != nd.boundary - set(low):
            out.append(f"critical set {nd.id}: two low bottom edges but the rest do not go higher")
    for r in H.roles:
        if r.bottom:
            if r.companion is None:
                out.append(f"bottom edge {r.edge} has no companion")
            elif r.edge not in (G.e_plus, G.e_plus_twin) and r.companion not in (G.e_plus,):
                other = H.roles[r.companion]
                if other.last_cuts is not None and r.last_cuts is not None and set(other.last_cuts) != set(r.last_cuts):
                    out.append(f"companions {r.edge},{r.companion} have different last cuts")
    return out
