"""Exact joint laws of sampled edges and the even-at-last statistics.

Edges owned by different critical sets are independent, so the law of any
small half-edge set is the product of per-owner laws; each per-owner law is
read off Laplacian determinants of the fitted node distribution, and the
root contributes one uniform coin per parallel pair (the designated edge is
always present, its twin never).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .._validation import TREE_STREAM, trial_rng
from ..cuts import CutHierarchy
from ..maxent import subset_law
from ..pipeline import NodeModel, sample_one_tree

P_GOOD = 1.0 / 27


@dataclass(frozen=True, eq=False)
class EdgeLaw:
    """Joint law of the indicators of ``edges``: bit i of a mask is edge i."""

    edges: tuple[int, ...]
    masks: np.ndarray
    probs: np.ndarray

    def bits(self, subset) -> int:
        pos = {e: i for i, e in enumerate(self.edges)}
        return sum(1 << pos[e] for e in subset)

    def parity(self, cut) -> np.ndarray:
        """Per pattern: True where ``|T & cut|`` is even."""
        b = np.uint64(self.bits(cut))
        return _popcount(self.masks & b) % 2 == 0

    def count(self, subset) -> np.ndarray:
        return _popcount(self.masks & np.uint64(self.bits(subset)))

    def prob(self, selector: np.ndarray) -> float:
        return float(math.fsum(self.probs[selector]))


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64)
    out = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        out += (a & np.uint64(1)).astype(np.int64)
        a = a >> np.uint64(1)
    return out


def edge_law(H: CutHierarchy, models: dict[int, NodeModel], edges) -> EdgeLaw:
    """Exact joint law of a set of support half-edges under the 1-tree sampler."""
    edges = tuple(sorted(set(int(e) for e in edges)))
    if len(edges) > 62:
        raise ValueError("at most 62 edges per joint law")
    G = H.graph
    by_owner: dict[int, list[int]] = {}
    for i, e in enumerate(edges):
        by_owner.setdefault(H.owner(e), []).append(i)
    masks = np.zeros(1, dtype=np.uint64)
    probs = np.ones(1)
    for owner, idx in sorted(by_owner.items()):
        local_masks, local_probs = [], []
        if owner == H.root:
            root = H.nodes[H.root]
            factors = []
            for gap in root.gaps:
                hit = [i for i in idx if edges[i] in gap]
                if not hit:
                    continue
                if G.e_plus in gap:
                    law = {sum(1 << i for i in hit if edges[i] == G.e_plus): 1.0}
                else:
                    law = {}
                    for chosen in gap:
                        key = sum(1 << i for i in hit if edges[i] == chosen)
                        law[key] = law.get(key, 0.0) + 0.5
                factors.append(law)
            lm, lp = np.zeros(1, dtype=np.uint64), np.ones(1)
            for law in factors:
                km = np.array(list(law), dtype=np.uint64)
                kp = np.array(list(law.values()))
                lm = (lm[:, None] | km[None, :]).ravel()
                lp = (lp[:, None] * kp[None, :]).ravel()
            local_masks, local_probs = lm, lp
        else:
            model = models[owner]
            pos = {h: j for j, h in enumerate(model.edges)}
            law = subset_law(model.dist, [pos[edges[i]] for i in idx])
            for key, pr in law.items():
                local_masks.append(sum(1 << idx[j] for j in range(len(idx)) if key >> j & 1))
                local_probs.append(pr)
            local_masks = np.array(local_masks, dtype=np.uint64)
            local_probs = np.array(local_probs)
        masks = (masks[:, None] | local_masks[None, :]).ravel()
        probs = (probs[:, None] * local_probs[None, :]).ravel()
    return EdgeLaw(edges, masks, probs)


def cut_parity_law(H: CutHierarchy, models, cuts) -> dict[tuple[bool, ...], float]:
    """Joint law of the evenness of several cuts."""
    cuts = [frozenset(c) for c in cuts]
    law = edge_law(H, models, frozenset().union(*cuts))
    flags = np.stack([law.parity(c) for c in cuts], axis=1)
    out: dict[tuple[bool, ...], float] = {}
    for row, pr in zip(map(tuple, flags.tolist()), law.probs):
        out[row] = out.get(row, 0.0) + pr
    return out


def cut_even(tree_edges, cut) -> bool:
    return len(cut & tree_edges) % 2 == 0


def even_at_last(tree_edges, e: int, H: CutHierarchy) -> bool:
    """Both last cuts of ``e`` meet the 1-tree in an even number of edges."""
    tree_edges = frozenset(tree_edges)
    c1, c2 = H.last_cuts(e)
    return cut_even(tree_edges, c1) and cut_even(tree_edges, c2)


def wilson_interval(successes: int, trials: int, z: float = 2.5758293035489004) -> tuple[float, float]:
    """Wilson score interval (default 99%)."""
    if trials == 0:
        return 0.0, 1.0
    ph = successes / trials
    den = 1 + z * z / trials
    mid = (ph + z * z / (2 * trials)) / den
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass(eq=False)
class EdgeAnalysis:
    """Per half-edge probability of being even at last and derived labels.

    ``p`` is NaN for the designated edge, which lies on no critical cut and
    is always treated as bad.  ``lower`` equals ``p`` for exact analyses and
    is the 99% Wilson lower bound for Monte Carlo ones.
    """

    hierarchy: CutHierarchy
    p: np.ndarray
    lower: np.ndarray
    good: np.ndarray
    reduction_class: list[str | None]
    method: str
    threshold: float = P_GOOD
    trials: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        H = self.hierarchy
        edges = []
        for e in range(len(self.p)):
            edges.append(
                {
                    "edge": e,
                    "role": "top" if H.roles[e].top else "bottom",
                    "p": None if np.isnan(self.p[e]) else float(self.p[e]),
                    "lower": None if np.isnan(self.lower[e]) else float(self.lower[e]),
                    "good": bool(self.good[e]),
                    "reduction": self.reduction_class[e],
                }
            )
        return {"method": self.method, "threshold": self.threshold, "trials": self.trials, "edges": edges}


def exact_p(H: CutHierarchy, models, e: int) -> float:
    c1, c2 = H.last_cuts(e)
    law = edge_law(H, models, c1 | c2)
    return law.prob(law.parity(c1) & law.parity(c2))


def reduction_classes(H: CutHierarchy, good: np.ndarray) -> list[str | None]:
    """'beta' for good bottom edges; 'tau2' for good top edges whose two
    endpoint critical cuts each hold exactly two good top edges that do not
    go higher; 'tau3' for the remaining good top edges."""
    G = H.graph

    def low_good_top(node: int) -> int:
        nd = H.nodes[node]
        return sum(1 for f in nd.boundary if good[f] and H.roles[f].top and f not in nd.higher)

    out: list[str | None] = []
    for e in range(G.m):
        r = H.roles[e]
        if e == G.e_plus or not good[e]:
            out.append(None)
        elif r.bottom:
            out.append("beta")
        elif low_good_top(r.s_u) == 2 and low_good_top(r.s_v) == 2:
            out.append("tau2")
        else:
            out.append("tau3")
    return out


def estimate_p(
    H: CutHierarchy,
    models: dict[int, NodeModel],
    method: str = "exact",
    n_trials: int = 100_000,
    seed: int | None = None,
    threshold: float = P_GOOD,
) -> EdgeAnalysis:
    """Probability that each edge is even at last, with good/bad labels.

    Monte Carlo labels an edge good only when its 99% lower confidence bound
    reaches the threshold.
    """
    G = H.graph
    m = G.m
    p = np.full(m, np.nan)
    lower = np.full(m, np.nan)
    if method == "exact":
        for e in range(m):
            if e != G.e_plus:
                p[e] = exact_p(H, models, e)
        lower = p.copy()
        trials = 0
    elif method == "mc":
        if seed is None:
            raise ValueError("Monte Carlo estimation needs a seed")
        counts = np.zeros(m, dtype=np.int64)
        lasts = [(e, H.last_cuts(e)) for e in range(m) if e != G.e_plus]
        for t in range(n_trials):
            T = sample_one_tree(H, models, trial_rng(seed, t, TREE_STREAM)).edges
            for e, (c1, c2) in lasts:
                if cut_even(T, c1) and cut_even(T, c2):
                    counts[e] += 1
        for e, _ in lasts:
            p[e] = counts[e] / n_trials
            lower[e] = wilson_interval(int(counts[e]), n_trials)[0]
        trials = n_trials
    else:
        raise ValueError("method must be 'exact' or 'mc'")
    good = np.zeros(m, dtype=bool)
    ok = ~np.isnan(lower)
    # exact probabilities are compared with a tiny allowance for rounding
    slack = 1e-12 if method == "exact" else 0.0
    good[ok] = lower[ok] >= threshold - slack
    return EdgeAnalysis(H, p, lower, good, reduction_classes(H, good), method, threshold, trials)
