"""End-to-end sampling: one tree per critical set, a random root cycle, then
the cheapest O-join and a shortcut tour."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import TREE_STREAM, check_positive, check_rng, trial_rng
from .cuts import CutHierarchy, build_hierarchy
from .instance import (
    HalfIntegralSolution,
    InstanceError,
    SupportGraph,
    build_support,
    ensure_unit_edge,
    load_instance,
    metric_closure,
    parse_instance,
    validate,
)
from .join import collapse_tour, min_ojoin, shortcut, tour_cost
from .maxent import TreeDistribution, fit_distribution


@dataclass(frozen=True, eq=False)
class NodeModel:
    """Fitted tree law on the contracted interior of one critical set."""

    node: int
    edges: tuple[int, ...]  # support half-edge behind each local edge
    dist: TreeDistribution

    def sample(self, rng) -> tuple[int, ...]:
        return tuple(self.edges[i] for i in self.dist.sample(rng))


@dataclass(frozen=True, eq=False)
class OneTree:
    edges: frozenset[int]
    per_node: dict[int, tuple[int, ...]]
    odd: frozenset[int]
    e_plus: int

    def cost(self, G: SupportGraph) -> float:
        return math.fsum(G.costs[h] for h in sorted(self.edges))


def node_graph(H: CutHierarchy, node: int) -> tuple[int, list[tuple[int, int]], tuple[int, ...]]:
    """Contracted interior of a node: (children count, local ends, half-edge ids)."""
    nd = H.nodes[node]
    pos = {}
    for i, c in enumerate(nd.children):
        for v in H.nodes[c].members:
            pos[v] = i
    ends = [(pos[int(H.graph.ends[h][0])], pos[int(H.graph.ends[h][1])]) for h in nd.internal]
    return len(nd.children), ends, tuple(nd.internal)


def fit_node_models(H: CutHierarchy, epsilon: float = 1e-3) -> dict[int, NodeModel]:
    """Fit every critical set with target 1/2 on each interior half-edge."""
    out = {}
    for nd in H.critical():
        k, ends, hs = node_graph(H, nd.id)
        z = np.full(len(ends), 0.5)
        out[nd.id] = NodeModel(nd.id, hs, fit_distribution(k, ends, z, epsilon))
    return out


def odd_set(G: SupportGraph, edges) -> frozenset[int]:
    deg = np.zeros(G.n, dtype=np.int64)
    for h in edges:
        a, b = G.ends[h]
        deg[a] += 1
        deg[b] += 1
    return frozenset(int(v) for v in np.flatnonzero(deg % 2))


def _is_spanning_tree(n: int, ends, edges) -> bool:
    if len(edges) != n - 1:
        return False
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for h in edges:
        ra, rb = find(int(ends[h][0])), find(int(ends[h][1]))
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def sample_one_tree(H: CutHierarchy, models: dict[int, NodeModel], rng) -> OneTree:
    """Independent trees on critical sets (contraction order), then one copy of
    every root pair chosen uniformly, with the designated edge forced."""
    rng = check_rng(rng)
    G = H.graph
    per_node = {}
    for nid in H.order:
        per_node[nid] = models[nid].sample(rng)
    root = H.nodes[H.root]
    coins = rng.integers(0, 2, size=len(root.gaps))
    chosen = []
    for gap, coin in zip(root.gaps, coins):
        if G.e_plus in gap:
            chosen.append(G.e_plus)
        else:
            chosen.append(gap[int(coin)])
    per_node[H.root] = tuple(chosen)
    edges = frozenset(h for part in per_node.values() for h in part)
    if len(edges) != G.n or not _is_spanning_tree(G.n, G.ends, sorted(edges - {G.e_plus})):
        raise AssertionError("assembled edges do not form a 1-tree")
    return OneTree(edges, per_node, odd_set(G, edges), G.e_plus)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    tree_cost: float
    join_cost: float
    tour_cost: float
    ratio: float
    n_odd: int

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "treeCost": self.tree_cost,
            "joinCost": self.join_cost,
            "tourCost": self.tour_cost,
            "ratio": self.ratio,
            "nOdd": self.n_odd,
        }


def summarize(values, z: float = 2.5758293035489004) -> dict:
    """Mean, sample deviation, max and a normal-approximation 99% interval."""
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v) / len(v)
    sd = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    half = z * sd / math.sqrt(len(v))
    return {"mean": mean, "stddev": sd, "max": float(v.max()), "ci99": [mean - half, mean + half]}


def _load(instance) -> HalfIntegralSolution:
    if isinstance(instance, HalfIntegralSolution):
        return instance
    if isinstance(instance, dict):
        return parse_instance(instance)
    if isinstance(instance, (str, Path)):
        return load_instance(instance)
    raise InstanceError(f"cannot read an instance from {type(instance).__name__}")


class HalfIntegralTSP(BaseEstimator):
    """Randomized tour construction for half-integral subtour LP solutions.

    ``fit`` validates the instance, designates the unit edge, builds the
    critical-set hierarchy, fits one tree law per critical set and prepares
    the metric.  ``solve`` then runs independent seeded trials.
    """

    def __init__(self, epsilon: float = 1e-3, force_split: bool = False, n_jobs: int | None = 1):
        self.epsilon = epsilon
        self.force_split = force_split
        self.n_jobs = n_jobs

    def fit(self, instance, y=None):
        check_positive(self.epsilon, "epsilon")
        sol = _load(instance)
        report = validate(sol)
        if not report.ok:
            raise InstanceError(f"invalid instance: {report.violations[:3]}")
        self.input_ = sol
        self.solution_, _ = ensure_unit_edge(sol, force_split=self.force_split)
        self.support_ = build_support(self.solution_)
        self.hierarchy_ = build_hierarchy(self.support_)
        self.distributions_ = fit_node_models(self.hierarchy_, self.epsilon)
        self.metric_ = metric_closure(self.solution_)
        self.lp_cost_ = self.solution_.lp_cost
        return self

    def sample_one_tree(self, random_state) -> OneTree:
        check_is_fitted(self, "hierarchy_")
        return sample_one_tree(self.hierarchy_, self.distributions_, random_state)

    def run_trial(self, seed: int, trial: int, keep_tour: bool = False):
        """One seeded trial; with ``keep_tour`` also returns (tree, join, tour)."""
        check_is_fitted(self, "hierarchy_")
        T = self.sample_one_tree(trial_rng(seed, trial, TREE_STREAM))
        J = min_ojoin(self.metric_, T.odd)
        tour = shortcut([self.support_.ends[h] for h in sorted(T.edges)], J, self.support_.n)
        cost = tour_cost(tour, self.metric_)
        c_t = T.cost(self.support_)
        rec = TrialRecord(trial, c_t, J.cost, cost, cost / self.lp_cost_, len(T.odd))
        if keep_tour:
            return rec, T, J, collapse_tour(tour, self.solution_.origin)
        return rec

    def _chunk(self, seed: int, trials) -> list[TrialRecord]:
        return [self.run_trial(seed, t) for t in trials]

    def solve(self, n_trials: int = 1000, seed: int | None = None, n_jobs: int | None = None) -> dict:
        """Per-trial records (in trial order) and summary statistics."""
        check_is_fitted(self, "hierarchy_")
        if seed is None:
            raise ValueError("a seed is required for solve")
        n_trials = check_positive(n_trials, "n_trials", integer=True)
        jobs = self.n_jobs if n_jobs is None else n_jobs
        if jobs in (None, 1):
            records = self._chunk(seed, range(n_trials))
        else:
            width = max(1, n_trials // (4 * max(1, abs(jobs))))
            chunks = [range(i, min(i + width, n_trials)) for i in range(0, n_trials, width)]
            parts = Parallel(n_jobs=jobs)(delayed(self._chunk)(seed, c) for c in chunks)
            records = [r for part in parts for r in part]
        return {
            "records": records,
            "summary": {
                "trials": n_trials,
                "lpCost": self.lp_cost_,
                "treeCost": summarize([r.tree_cost for r in records]),
                "joinCost": summarize([r.join_cost for r in records]),
                "tourCost": summarize([r.tour_cost for r in records]),
                "ratio": summarize([r.ratio for r in records]),
            },
        }
