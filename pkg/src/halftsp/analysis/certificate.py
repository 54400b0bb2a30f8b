"""Randomized fractional O-join certificates.

Every half-edge starts at 1/4.  A good edge that is even at last and wins
its coin is lowered by an amount fixed by its reduction class; on every odd
minimum cut the total lowered amount is then handed back to the good edges
having that cut among their last cuts.  The combined certificate mixes this
vector with the fixed vector (1/2 on good edges, 1/6 on bad ones).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .._validation import BERNOULLI_STREAM, TREE_STREAM, trial_rng
from ..cuts import CutHierarchy
from ..join import min_ojoin
from ..pipeline import NodeModel, sample_one_tree
from .evenness import EdgeAnalysis, cut_even, edge_law

Q = 0.25


@dataclass(frozen=True)
class CertificateParams:
    beta: float = 1 / 12
    tau2: float = 7 / 120
    tau3: float = 7 / 180
    alpha: float = 2160 / 2161
    p: float = 1 / 27
    increase_rule: str = "odd"  # "max": both last-cut shares, even when one cut is even

    def check(self) -> None:
        tol = 1e-15
        if not (self.tau3 <= self.tau2 + tol and self.tau2 <= self.beta + tol and self.beta <= 1 / 12 + tol):
            raise ValueError("need tau3 <= tau2 <= beta <= 1/12")
        if self.beta < 5 * self.tau2 / 4 - tol:
            raise ValueError("need beta >= 5 tau2 / 4")
        if 3 * self.tau3 > 2 * self.tau2 + tol:
            raise ValueError("need 3 tau3 <= 2 tau2")
        if min(self.beta, self.tau2, self.tau3) < 0 or not 0 <= self.alpha <= 1:
            raise ValueError("reductions must be nonnegative and alpha in [0, 1]")
        if self.increase_rule not in ("max", "odd"):
            raise ValueError("increase_rule must be 'max' or 'odd'")

    def amount(self, cls: str | None) -> float:
        return {"beta": self.beta, "tau2": self.tau2, "tau3": self.tau3}.get(cls, 0.0)

    def good_bound(self) -> float:
        """Target for E[y_e] on good edges: 1/4 - p/240."""
        return 0.25 - self.p / 240

    def combined_bound(self) -> float:
        a = self.alpha
        return max(a * self.good_bound() + (1 - a) / 2, a / 4 + (1 - a) / 6)


@dataclass(eq=False)
class CertificateContext:
    """Everything about the certificate that does not depend on the sample."""

    hierarchy: CutHierarchy
    analysis: EdgeAnalysis
    models: dict[int, NodeModel]
    params: CertificateParams
    cuts: list[frozenset[int]] = field(default_factory=list)
    last: dict[int, tuple[frozenset[int], frozenset[int]]] = field(default_factory=dict)
    holders: dict[frozenset[int], tuple[int, ...]] = field(default_factory=dict)
    leader: dict[int, int] = field(default_factory=dict)
    threshold: dict[int, float] = field(default_factory=dict)
    amount: dict[int, float] = field(default_factory=dict)

    @classmethod
    def build(cls, H: CutHierarchy, analysis: EdgeAnalysis, models, params: CertificateParams | None = None):
        params = params or CertificateParams()
        params.check()
        ctx = cls(H, analysis, models, params)
        G = H.graph
        ctx.cuts = [t.boundary for t in H.all_min_cuts()]
        good = [e for e in range(G.m) if analysis.good[e]]
        holders: dict[frozenset[int], list[int]] = {}
        for e in range(G.m):
            if e == G.e_plus:
                continue
            ctx.last[e] = H.last_cuts(e)
        for e in good:
            for c in ctx.last[e]:
                holders.setdefault(c, []).append(e)
        ctx.holders = {c: tuple(sorted(v)) for c, v in holders.items()}
        for e in good:
            comp = H.roles[e].companion
            ctx.leader[e] = min(e, comp) if comp is not None and analysis.good[comp] else e
            ctx.threshold[e] = params.p / analysis.p[e]
            ctx.amount[e] = params.amount(analysis.reduction_class[e])
        return ctx

    # -- per-sample pieces shared by the sampler and the exact expectation --
    def coins(self, rng) -> dict[int, bool]:
        """One uniform per half-edge id; companions read their leader's draw."""
        u = rng.random(self.hierarchy.graph.m)
        return {e: bool(u[self.leader[e]] < self.threshold[e]) for e in self.leader}

    def even_last(self, e: int, tree: frozenset[int]) -> bool:
        c1, c2 = self.last[e]
        return cut_even(tree, c1) and cut_even(tree, c2)

    def reduction(self, e: int, tree: frozenset[int], coins: dict[int, bool]) -> float:
        if e not in self.leader or not coins[self.leader[e]] or not self.even_last(e, tree):
            return 0.0
        return self.amount[e]

    def delta(self, cut: frozenset[int], tree, coins, memo: dict) -> float:
        if cut not in memo:
            memo[cut] = math.fsum(self.reduction(f, tree, coins) for f in cut)
        return memo[cut]

    def share(self, cut, tree, coins, memo) -> float:
        d = self.delta(cut, tree, coins, memo)
        n_hold = len(self.holders.get(cut, ()))
        if n_hold == 0:
            if d > 0 and not cut_even(tree, cut):
                raise AssertionError(f"odd cut {sorted(cut)} was lowered but has no good edge to compensate")
            return 0.0
        return d / n_hold

    def increase(self, e: int, tree, coins, memo) -> float:
        if e not in self.leader:
            return 0.0
        c1, c2 = self.last[e]
        odd1, odd2 = not cut_even(tree, c1), not cut_even(tree, c2)
        if not (odd1 or odd2):
            return 0.0
        if self.params.increase_rule == "max":
            return max(self.share(c1, tree, coins, memo), self.share(c2, tree, coins, memo))
        return max(self.share(c, tree, coins, memo) for c, odd in ((c1, odd1), (c2, odd2)) if odd)

    def y_entry(self, e: int, tree, coins, memo) -> float:
        return Q - self.reduction(e, tree, coins) + self.increase(e, tree, coins, memo)


@dataclass(frozen=True, eq=False)
class JoinVector:
    y: np.ndarray
    coins: dict[int, bool]
    reductions: np.ndarray
    increases: np.ndarray
    odd_cuts: tuple[frozenset[int], ...]
    deltas: dict[frozenset[int], float]


def construct_y(tree, ctx: CertificateContext, rng) -> JoinVector:
    """The three-step certificate for one sampled 1-tree."""
    tree = frozenset(tree)
    m = ctx.hierarchy.graph.m
    coins = ctx.coins(rng)
    memo: dict = {}
    red = np.array([ctx.reduction(e, tree, coins) for e in range(m)])
    inc = np.array([ctx.increase(e, tree, coins, memo) for e in range(m)])
    odd = tuple(c for c in ctx.cuts if not cut_even(tree, c))
    deltas = {c: ctx.delta(c, tree, coins, memo) for c in odd}
    for c, d in deltas.items():
        if d > 0 and not ctx.holders.get(c):
            raise AssertionError(f"odd cut {sorted(c)} was lowered but has no good edge to compensate")
    return JoinVector(Q - red + inc, coins, red, inc, odd, deltas)


def combine_certificate(y: np.ndarray, analysis: EdgeAnalysis, alpha: float = 2160 / 2161) -> np.ndarray:
    """alpha * y + (1 - alpha) * y', with y' = 1/2 on good edges, 1/6 on bad."""
    y_fixed = np.where(analysis.good, 0.5, 1 / 6)
    return alpha * np.asarray(y) + (1 - alpha) * y_fixed


def verify_feasibility(y, tree, cuts, tol: float = 1e-12) -> dict:
    """Every odd min cut must carry at least 1; the smallest entry must be at
    least 1/6, which covers every larger cut (six or more half-edges)."""
    tree = frozenset(tree)
    y = np.asarray(y, dtype=float)
    violations = []
    for c in cuts:
        c = c.boundary if hasattr(c, "boundary") else frozenset(c)
        if not cut_even(tree, c):
            total = math.fsum(y[list(c)])
            if total < 1 - tol:
                violations.append({"cut": sorted(c), "value": total})
    low = float(y.min()) if len(y) else 1.0
    if low < 1 / 6 - tol:
        violations.append({"min_entry": low})
    return {"feasible": not violations, "violations": violations, "min_entry": low}


def expected_y(ctx: CertificateContext, e: int) -> float:
    """Exact E[y_e] over tree samples and coins.

    y_e only depends on the parities of the last cuts of ``e`` and of the
    good edges on them, and on those edges' coins; their joint law is exact.
    """
    H = ctx.hierarchy
    if e not in ctx.leader:
        return Q
    c1, c2 = ctx.last[e]
    near = sorted(f for f in c1 | c2 if f in ctx.leader)
    cuts = {c1, c2}
    for f in near:
        cuts.update(ctx.last[f])
    cuts = sorted(cuts, key=sorted)
    law = edge_law(H, ctx.models, frozenset().union(*cuts))
    flags = np.stack([law.parity(c) for c in cuts], axis=1)
    parity_law: dict[tuple[bool, ...], float] = {}
    for row, pr in zip(map(tuple, flags.tolist()), law.probs):
        parity_law[row] = parity_law.get(row, 0.0) + pr
    leaders = sorted({ctx.leader[f] for f in near})
    # a representative tree per parity vector lets the shared helpers run unchanged
    rep: dict[tuple[bool, ...], frozenset[int]] = {}
    for row, mask in zip(map(tuple, flags.tolist()), law.masks.tolist()):
        if row not in rep:
            rep[row] = frozenset(x for i, x in enumerate(law.edges) if mask >> i & 1)
    total = []
    for row, pr in parity_law.items():
        tree = rep[row]
        for bits in itertools.product((False, True), repeat=len(leaders)):
            coins = dict(zip(leaders, bits))
            w = pr
            for f, b in coins.items():
                q = ctx.threshold[f]
                w *= q if b else 1 - q
            if w == 0:
                continue
            total.append(w * ctx.y_entry(e, tree, coins, {}))
    return math.fsum(total)


def expected_z(ctx: CertificateContext, e: int) -> float:
    a = ctx.params.alpha
    fixed = 0.5 if ctx.analysis.good[e] else 1 / 6
    return a * expected_y(ctx, e) + (1 - a) * fixed


def exact_constants() -> dict[str, Fraction]:
    """Reference values of the default constants as exact fractions."""
    a = Fraction(2160, 2161)
    p = Fraction(1, 27)
    return {
        "good_bound": Fraction(1, 4) - p / 240,
        "z_good_unreduced": a / 4 + (1 - a) / 2,
        "z_bad": a / 4 + (1 - a) / 6,
        "z_good_bound": a * (Fraction(1, 4) - p / 240) + (1 - a) / 2,
    }


@dataclass(frozen=True)
class CertificateTrial:
    trial: int
    feasible_y: bool
    feasible_z: bool
    y_min: float
    y_max: float
    bad_ok: bool
    join_cost: float | None
    z_cost: float
    half_lp: float
    n_odd: int


def certificate_trial(model, ctx: CertificateContext, seed: int, trial: int, with_join: bool = True) -> CertificateTrial:
    """One seeded trial: sample, build y and z, check them, optionally match."""
    H = ctx.hierarchy
    G = H.graph
    T = sample_one_tree(H, model.distributions_, trial_rng(seed, trial, TREE_STREAM))
    jv = construct_y(T.edges, ctx, trial_rng(seed, trial, BERNOULLI_STREAM))
    z = combine_certificate(jv.y, ctx.analysis, ctx.params.alpha)
    fy = verify_feasibility(jv.y, T.edges, ctx.cuts)
    fz = verify_feasibility(z, T.edges, ctx.cuts)
    bad = ~ctx.analysis.good
    join_cost = min_ojoin(model.metric_, T.odd).cost if with_join else None
    return CertificateTrial(
        trial,
        fy["feasible"],
        fz["feasible"],
        float(jv.y.min()),
        float(jv.y.max()),
        bool(np.all(jv.y[bad] == Q)),
        join_cost,
        math.fsum(z * G.costs),
        model.lp_cost_ / 2,
        len(T.odd),
    )
