"""Half-integral subtour LP solutions and their 4-regular support multigraphs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import _flow

TRIANGLE_TOL = 1e-8


class InstanceError(ValueError):
    """Malformed instance input (distinct from a failed validation)."""


class StructureError(RuntimeError):
    """No vertex split keeps the support graph 4-edge-connected."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    x: float
    cost: float


@dataclass(frozen=True)
class SplitRecord:
    vertex: int
    new_vertices: tuple[int, int]
    pairing: tuple[tuple[int, int], tuple[int, int]]  # neighbor lists attached to each new vertex


@dataclass(frozen=True, eq=False)
class HalfIntegralSolution:
    """Vertices ``0..n-1`` with edges of value 1/2 or 1.

    ``origin`` maps every vertex to a vertex of the instance as given by the
    user (the identity unless a vertex was split); ``unit_edge`` is the index
    of the designated value-1 edge once one has been chosen.
    """

    n: int
    edges: tuple[Edge, ...]
    matrix: np.ndarray | None = None
    origin: tuple[int, ...] = ()
    unit_edge: int | None = None
    split: SplitRecord | None = None

    def __post_init__(self):
        if not self.origin:
            object.__setattr__(self, "origin", tuple(range(self.n)))

    @property
    def lp_cost(self) -> float:
        """c(x), summed exactly."""
        return math.fsum(e.x * e.cost for e in self.edges)

    @property
    def n_original(self) -> int:
        return max(self.origin) + 1 if self.origin else 0

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "edges": [{"u": e.u, "v": e.v, "x": e.x, "cost": e.cost} for e in self.edges],
        }
        if self.matrix is not None:
            out["matrix"] = self.matrix.tolist()
        if self.unit_edge is not None:
            out["unit_edge"] = self.unit_edge
        return out


@dataclass
class ValidationReport:
    violations: list[dict] = field(default_factory=list)
    min_cut: int | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, **detail):
        self.violations.append({"kind": kind, **detail})

    def to_dict(self) -> dict:
        return {"valid": self.ok, "min_cut": self.min_cut, "violations": self.violations}


def parse_instance(data: dict) -> HalfIntegralSolution:
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object")
    try:
        n = data["n"]
        raw_edges = data["edges"]
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InstanceError(f"n must be a positive integer, got {n!r}")
    edges = []
    seen = set()
    for i, item in enumerate(raw_edges):
        try:
            u, v, x, cost = item["u"], item["v"], item["x"], item["cost"]
        except (KeyError, TypeError):
            raise InstanceError(f"edge {i} must have u, v, x and cost") from None
        for name, val in (("u", u), ("v", v)):
            if not isinstance(val, int) or isinstance(val, bool) or not 0 <= val < n:
                raise InstanceError(f"edge {i}: {name}={val!r} is not a vertex id in 0..{n - 1}")
        if u == v:
            raise InstanceError(f"edge {i} is a self-loop")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InstanceError(f"duplicate edge {key}; encode parallel copies with x=1")
        seen.add(key)
        if not isinstance(x, (int, float)) or isinstance(x, bool):
            raise InstanceError(f"edge {i}: x must be a number")
        if not isinstance(cost, (int, float)) or isinstance(cost, bool) or not math.isfinite(cost):
            raise InstanceError(f"edge {i}: cost must be a finite number")
        edges.append(Edge(u, v, float(x), float(cost)))
    matrix = data.get("matrix")
    if matrix is not None:
        try:
            matrix = np.asarray(matrix, dtype=float)
        except (TypeError, ValueError):
            raise InstanceError("matrix must be a list of numeric rows") from None
        if matrix.shape != (n, n):
            raise InstanceError(f"matrix must be {n}x{n}, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InstanceError("matrix entries must be finite")
    unit = data.get("unit_edge")
    if unit is not None:
        if not isinstance(unit, int) or isinstance(unit, bool) or not 0 <= unit < len(edges):
            raise InstanceError(f"unit_edge must be an edge index in 0..{len(edges) - 1}, got {unit!r}")
        if edges[unit].x != 1.0:
            raise InstanceError(f"unit_edge {unit} has x={edges[unit].x}, need 1")
    return HalfIntegralSolution(n=n, edges=tuple(edges), matrix=matrix, unit_edge=unit)


def load_instance(path) -> HalfIntegralSolution:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from None
    return parse_instance(data)


def save_instance(sol: HalfIntegralSolution, path) -> None:
    Path(path).write_text(json.dumps(sol.to_dict(), indent=1))


def _half_edge_ends(sol: HalfIntegralSolution) -> list[tuple[int, int]]:
    ends = []
    for e in sol.edges:
        copies = 2 if e.x == 1.0 else 1
        ends.extend([(e.u, e.v)] * copies)
    return ends


def validate(sol: HalfIntegralSolution) -> ValidationReport:
    """Check degree, half-integrality, 4-edge-connectivity and the metric."""
    report = ValidationReport()
    for i, e in enumerate(sol.edges):
        if e.x not in (0.5, 1.0):
            report.add("non_half_integral", edge=i, x=e.x)
        if e.cost < 0:
            report.add("negative_cost", edge=i, cost=e.cost)
    degree = [0.0] * sol.n
    for e in sol.edges:
        degree[e.u] += e.x
        degree[e.v] += e.x
    for v, d in enumerate(degree):
        if d != 2.0:
            report.add("degree", vertex=v, degree=d)
    if all(e.x in (0.5, 1.0) for e in sol.edges):
        report.min_cut = _flow.global_min_cut_value(sol.n, _half_edge_ends(sol))
        if report.min_cut != 4:
            report.add("min_cut", value=report.min_cut)
    M = sol.matrix
    if M is not None:
        if np.any(M < 0):
            report.add("negative_cost", where="matrix")
        asym = np.argwhere(M != M.T)
        for i, j in asym[asym[:, 0] < asym[:, 1]][:10]:
            report.add("asymmetric_cost", u=int(i), v=int(j))
        if np.any(np.diag(M) != 0):
            report.add("nonzero_diagonal")
        for i, e in enumerate(sol.edges):
            if abs(M[e.u, e.v] - e.cost) > TRIANGLE_TOL:
                report.add("cost_mismatch", edge=i, matrix=float(M[e.u, e.v]), cost=e.cost)
        worst = _worst_triangle_violation(M)
        if worst is not None:
            report.add("triangle_inequality", **worst)
    return report


def _worst_triangle_violation(M: np.ndarray) -> dict | None:
    n = len(M)
    best = None
    for k in range(n):
        excess = M - (M[:, k : k + 1] + M[k : k + 1, :])
        i, j = np.unravel_index(np.argmax(excess), excess.shape)
        if excess[i, j] > TRIANGLE_TOL and (best is None or excess[i, j] > best["excess"]):
            best = {"u": int(i), "w": int(j), "via": k, "excess": float(excess[i, j])}
    return best


def _split_vertex(sol: HalfIntegralSolution, v: int, pairing) -> HalfIntegralSolution:
    """Attach the half-edge groups ``pairing`` of ``v`` to ``v`` and a new vertex."""
    v1, v2 = v, sol.n
    # neighbor -> multiplicity at each new vertex
    weight = [{}, {}]
    for side, group in enumerate(pairing):
        for nb in group:
            weight[side][nb] = weight[side].get(nb, 0.0) + 0.5
    cost_of = {}
    kept = []
    for e in sol.edges:
        if v in (e.u, e.v):
            cost_of[e.v if e.u == v else e.u] = e.cost
        else:
            kept.append(e)
    for side, vid in ((0, v1), (1, v2)):
        for nb, x in sorted(weight[side].items()):
            kept.append(Edge(vid, nb, x, cost_of[nb]))
    kept.append(Edge(v1, v2, 1.0, 0.0))
    matrix = None
    if sol.matrix is not None:
        idx = list(range(sol.n)) + [v]
        matrix = sol.matrix[np.ix_(idx, idx)].copy()
    record = SplitRecord(v, (v1, v2), (tuple(pairing[0]), tuple(pairing[1])))
    return HalfIntegralSolution(
        n=sol.n + 1,
        edges=tuple(kept),
        matrix=matrix,
        origin=sol.origin + (sol.origin[v],),
        unit_edge=len(kept) - 1,
        split=record,
    )


def _pairings(stubs):
    h0, h1, h2, h3 = stubs
    return [((h0, h1), (h2, h3)), ((h0, h2), (h1, h3)), ((h0, h3), (h1, h2))]


def ensure_unit_edge(sol: HalfIntegralSolution, force_split: bool = False):
    """Designate a value-1 edge, splitting a vertex when none exists.

    Returns ``(solution, edge index)``.  Without ``force_split`` an existing
    value-1 edge (the first in (u, v) order) is reused unchanged.  Otherwise
    the lowest-id vertex is split into itself plus a new vertex ``n`` joined
    by a zero-cost value-1 edge; the three ways of dividing its four
    half-edges are tried in a fixed order and the first whose support graph
    stays 4-edge-connected is kept.
    """
    if sol.unit_edge is not None and not force_split:
        return sol, sol.unit_edge
    if not force_split:
        units = [i for i, e in enumerate(sol.edges) if e.x == 1.0]
        if units:
            i = min(units, key=lambda j: (min(sol.edges[j].u, sol.edges[j].v), max(sol.edges[j].u, sol.edges[j].v)))
            return replace(sol, unit_edge=i), i
    for v in range(sol.n):
        stubs = []
        for e in sol.edges:
            if v in (e.u, e.v):
                nb = e.v if e.u == v else e.u
                stubs.extend([nb] * (2 if e.x == 1.0 else 1))
        if len(stubs) != 4:
            continue
        for pairing in _pairings(stubs):
            cand = _split_vertex(sol, v, pairing)
            if validate(cand).ok:
                return cand, cand.unit_edge
    raise StructureError("no vertex split keeps the support graph 4-edge-connected")


@dataclass(frozen=True, eq=False)
class SupportGraph:
    """4-regular multigraph; one half-edge per unit of x/2.

    ``ends[h]`` are the endpoints of half-edge ``h``, ``origin_edge[h]`` its
    solution edge.  ``e_plus`` is the first copy of the designated unit edge.
    """

    n: int
    ends: np.ndarray
    costs: np.ndarray
    origin_edge: np.ndarray
    e_plus: int
    split: SplitRecord | None = None

    @property
    def m(self) -> int:
        return len(self.ends)

    @property
    def e_plus_twin(self) -> int:
        return self.e_plus + 1

    def incident(self, v: int) -> list[int]:
        return [h for h in range(self.m) if v in self.ends[h]]

    def boundary(self, side) -> frozenset[int]:
        return frozenset(_flow.boundary(self.ends, side))

    def edge_list(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in self.ends]


def build_support(sol: HalfIntegralSolution) -> SupportGraph:
    if sol.unit_edge is None:
        raise ValueError("designate a unit edge first (ensure_unit_edge)")
    ends, costs, origin = [], [], []
    e_plus = None
    for i, e in enumerate(sol.edges):
        copies = 2 if e.x == 1.0 else 1
        if i == sol.unit_edge:
            e_plus = len(ends)
        for _ in range(copies):
            ends.append((e.u, e.v))
            costs.append(e.cost)
            origin.append(i)
    return SupportGraph(
        n=sol.n,
        ends=np.asarray(ends, dtype=np.int64),
        costs=np.asarray(costs, dtype=float),
        origin_edge=np.asarray(origin, dtype=np.int64),
        e_plus=e_plus,
        split=sol.split,
    )


class DistanceOracle:
    """All-pairs distances plus the paths realising them."""

    def __init__(self, dist: np.ndarray, predecessors: np.ndarray | None = None):
        self.dist = dist
        self.predecessors = predecessors

    def __call__(self, a: int, b: int) -> float:
        return float(self.dist[a, b])

    def path(self, a: int, b: int) -> list[int]:
        if self.predecessors is None:
            return [a, b]
        out = [b]
        while out[-1] != a:
            out.append(int(self.predecessors[a, out[-1]]))
        return out[::-1]


def metric_closure(sol: HalfIntegralSolution) -> DistanceOracle:
    """The given matrix (re-indexed through split vertices) or the shortest-path
    closure of the cost-weighted support graph."""
    if sol.matrix is not None:
        M = sol.matrix
        if len(M) != sol.n:
            idx = list(sol.origin)
            M = M[np.ix_(idx, idx)].copy()
            for a in range(sol.n):
                for b in range(sol.n):
                    if a != b and sol.origin[a] == sol.origin[b]:
                        M[a, b] = 0.0
        return DistanceOracle(M)
    n = sol.n
    W = np.full((n, n), np.inf)
    for e in sol.edges:
        W[e.u, e.v] = min(W[e.u, e.v], e.cost)
        W[e.v, e.u] = W[e.u, e.v]
    rows, cols = np.nonzero(np.isfinite(W))
    # explicit zeros would be dropped by the sparse format; shift them to a tiny weight
    data = np.where(W[rows, cols] == 0.0, 1e-300, W[rows, cols])
    graph = csr_matrix((data, (rows, cols)), shape=(n, n))
    dist, pred = shortest_path(graph, method="D", directed=False, return_predecessors=True)
    if not np.all(np.isfinite(dist)):
        raise ValueError("support graph is disconnected")
    dist = np.where(dist < 1e-200, 0.0, dist)
    np.fill_diagonal(dist, 0.0)
    return DistanceOracle(dist, pred)
