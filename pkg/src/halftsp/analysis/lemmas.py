"""Probability bounds on the sampled 1-tree, checked witness by witness.

Each check evaluates an event probability on a concrete edge set of the
instance and compares it with its floor.  The exact method reads joint laws
from the fitted node distributions; the Monte Carlo method estimates the
same quantities from sampled 1-trees and reports 99% Wilson intervals.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .._validation import TREE_STREAM, trial_rng
from ..cuts import CYCLE, CutHierarchy
from ..maxent import transfer_matrix
from ..pipeline import NodeModel, sample_one_tree
from .bernoulli import poisson_binomial, reference_extremes
from .evenness import EdgeLaw, edge_law, wilson_interval

BOUNDS = {
    "min_cut_even": 13 / 27,
    "three_set_one": 1 / 2,
    "three_set_two": 3 / 8,
    "pair_one": 3 / 8,
    "partner_pairs": 3 / 16,
    "bottom_edge": 3 / 16,
    "top_edge": 1 / 16,
    "cut_has_good_edge": 1 / 27,
}


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    witness: dict
    value: float
    bound: float
    passed: bool
    sense: str = ">="
    statistical: bool = False
    interval: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "witness": self.witness,
            "value": self.value,
            "bound": self.bound,
            "sense": self.sense,
            "passed": self.passed,
            "statistical": self.statistical,
        }
        if self.interval is not None:
            out["interval"] = list(self.interval)
        return out


@dataclass
class LemmaReport:
    method: str
    trials: int
    checks: list[LemmaCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def by_name(self, name: str) -> list[LemmaCheck]:
        return [c for c in self.checks if c.name == name]

    def summary(self) -> dict[str, dict]:
        out: dict[str, dict] = {}
        for c in self.checks:
            s = out.setdefault(c.name, {"witnesses": 0, "failed": 0, "worst": None, "bound": c.bound})
            s["witnesses"] += 1
            s["failed"] += not c.passed
            slack = c.value - c.bound if c.sense == ">=" else c.bound - c.value
            if s["worst"] is None or slack < s["worst"]:
                s["worst"] = slack
        return out

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "trials": self.trials,
            "passed": self.passed,
            "summary": self.summary(),
            "checks": [c.to_dict() for c in self.checks],
        }


class _Laws:
    """Joint edge laws, exact or from a fixed batch of sampled 1-trees."""

    def __init__(self, H: CutHierarchy, models, method: str, n_trials: int, seed: int | None):
        self.H, self.models, self.method = H, models, method
        self.n = 0
        if method == "mc":
            if seed is None:
                raise ValueError("Monte Carlo checks need a seed")
            X = np.zeros((n_trials, H.graph.m), dtype=bool)
            for t in range(n_trials):
                X[t, sorted(sample_one_tree(H, models, trial_rng(seed, t, TREE_STREAM)).edges)] = True
            self.X = X
            self.n = n_trials
        elif method != "exact":
            raise ValueError("method must be 'exact' or 'mc'")

    def law(self, edges) -> EdgeLaw:
        edges = tuple(sorted(set(int(e) for e in edges)))
        if self.method == "exact":
            return edge_law(self.H, self.models, edges)
        weights = np.uint64(1) << np.arange(len(edges), dtype=np.uint64)
        masks = (self.X[:, list(edges)].astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
        return EdgeLaw(edges, masks, np.full(self.n, 1.0 / self.n))

    def check(self, name, witness, value, bound, tol, sense=">=") -> LemmaCheck:
        value = float(value)
        if self.method == "exact":
            ok = value >= bound - tol if sense == ">=" else value <= bound + tol
            return LemmaCheck(name, witness, value, bound, bool(ok), sense)
        lo, hi = wilson_interval(int(round(value * self.n)), self.n)
        # a bound is contradicted only when the whole interval lies beyond it
        ok = hi >= bound if sense == ">=" else lo <= bound
        return LemmaCheck(name, witness, value, bound, bool(ok), sense, True, (lo, hi))


def _even_at_last_p(H: CutHierarchy, laws: _Laws) -> np.ndarray:
    G = H.graph
    p = np.full(G.m, np.nan)
    for e in range(G.m):
        if e == G.e_plus:
            continue
        c1, c2 = H.last_cuts(e)
        law = laws.law(c1 | c2)
        p[e] = law.prob(law.parity(c1) & law.parity(c2))
    return p


def _child_stars(H: CutHierarchy, node: int) -> list[tuple[int, tuple[int, ...]]]:
    nd = H.nodes[node]
    out = []
    for c in nd.children:
        members = H.nodes[c].members
        star = tuple(h for h in nd.internal if (int(H.graph.ends[h][0]) in members) != (int(H.graph.ends[h][1]) in members))
        out.append((c, star))
    return out


def lemma_suite(
    H: CutHierarchy,
    models: dict[int, NodeModel],
    method: str = "exact",
    n_trials: int = 100_000,
    seed: int | None = None,
    tol: float = 1e-9,
) -> LemmaReport:
    """Run every probabilistic check on every applicable witness."""
    laws = _Laws(H, models, method, n_trials, seed)
    report = LemmaReport(method, laws.n)
    add = report.checks.append
    G = H.graph
    cuts = [t.boundary for t in H.all_min_cuts()]

    for c in cuts:
        law = laws.law(c)
        add(laws.check("min_cut_even", {"cut": sorted(c)}, law.prob(law.parity(c)), BOUNDS["min_cut_even"], tol))

    for nd in H.critical():
        for child, star in _child_stars(H, nd.id):
            if len(star) != 3:
                continue
            law = laws.law(star)
            k = law.count(star)
            if law.prob(k >= 1) < 1 - 1e-12:
                continue
            w = {"node": nd.id, "child": child, "edges": list(star)}
            add(laws.check("three_set_one", w, law.prob(k == 1), BOUNDS["three_set_one"], tol))
            add(laws.check("three_set_two", w, law.prob(k == 2), BOUNDS["three_set_two"], tol))

    for nd in H.critical():
        for e, f in itertools.combinations(nd.internal, 2):
            law = laws.law((e, f))
            k = law.count((e, f))
            mean = float(np.dot(k, law.probs))
            if not 0.5 - tol <= mean <= 1.5 + tol:
                continue
            add(laws.check("pair_one", {"node": nd.id, "edges": [e, f]}, law.prob(k == 1), BOUNDS["pair_one"], tol))

    for nd in H.critical():
        if nd.kind != CYCLE:
            continue
        s1, s2 = H.partners(nd.id)
        law = laws.law(s1 + s2)
        both = (law.count(s1) == 1) & (law.count(s2) == 1)
        add(laws.check("partner_pairs", {"node": nd.id, "pairs": [list(s1), list(s2)]}, law.prob(both), BOUNDS["partner_pairs"], tol))

    for nd in H.critical():
        for child, star in _child_stars(H, nd.id):
            for e in nd.internal:
                if e in star:
                    continue
                law = laws.law(star + (e,))
                has_e = law.count((e,)) == 1
                pe = law.prob(has_e)
                if pe <= 0:
                    continue
                cond = [law.prob(has_e & (law.count((f,)) == 1)) / pe for f in star]
                inside = sum(1 for q in cond if 0.25 - tol <= q <= 0.5 + tol)
                w = {"node": nd.id, "child": child, "star": list(star), "edge": e, "conditional": cond}
                report.checks.append(
                    LemmaCheck("correlation_window", w, float(inside), float(len(star) - 1), inside >= len(star) - 1, ">=", method == "mc")
                )

    p = _even_at_last_p(H, laws)
    for e in range(G.m):
        if e == G.e_plus or H.roles[e].top:
            continue
        add(laws.check("bottom_edge", {"edge": e}, p[e], BOUNDS["bottom_edge"], tol))

    for nd in H.critical():
        if len(nd.higher) != 1:
            continue
        rest = sorted(nd.boundary - nd.higher)
        good = [f for f in rest if f != G.e_plus and p[f] >= BOUNDS["top_edge"] - tol]
        w = {"node": nd.id, "higher": sorted(nd.higher), "others": rest, "p": [float(p[f]) for f in rest]}
        report.checks.append(LemmaCheck("top_edge", w, float(len(good)), 2.0, len(good) >= 2, ">=", method == "mc"))

    for c in cuts:
        vals = [p[f] for f in c if f != G.e_plus]
        best = max(vals) if vals else 0.0
        add(laws.check("cut_has_good_edge", {"cut": sorted(c)}, best, BOUNDS["cut_has_good_edge"], tol))

    for nd in H.critical():
        model = models[nd.id]
        K = transfer_matrix(model.dist.n, model.dist.ends, model.dist.lambdas)
        local = {h: i for i, h in enumerate(model.edges)}
        for e, f in itertools.combinations(nd.internal, 2):
            i, j = local[e], local[f]
            law = laws.law((e, f))
            ke, kf = law.count((e,)) == 1, law.count((f,)) == 1
            excess = law.prob(ke & kf) - law.prob(ke) * law.prob(kf)
            w = {"node": nd.id, "edges": [e, f], "kernel": -float(K[i, j] ** 2)}
            report.checks.append(
                LemmaCheck("negative_correlation", w, excess, 0.0, excess <= (tol if method == "exact" else 0.01), "<=", method == "mc")
            )
        for child, star in _child_stars(H, nd.id):
            idx = [local[h] for h in star]
            eig = np.linalg.eigvalsh(K[np.ix_(idx, idx)])
            law = edge_law(H, models, star)
            counts = np.bincount(law.count(star), weights=law.probs, minlength=len(star) + 1)
            gap = float(np.max(np.abs(poisson_binomial(np.clip(eig, 0, 1)) - counts)))
            in_range = bool(eig.min() >= -1e-9 and eig.max() <= 1 + 1e-9)
            w = {"node": nd.id, "child": child, "edges": list(star), "successProbabilities": eig.tolist()}
            report.checks.append(LemmaCheck("real_rooted", w, gap, 1e-9, in_range and gap <= 1e-9, "<="))

    for key, ref in reference_extremes().items():
        got = ref["result"]["value"]
        err = abs(got - ref["expected"])
        w = {"case": key, "profile": ref["result"]["profile"], "expected": ref["expected"]}
        report.checks.append(LemmaCheck("bernoulli_extremes", w, err, 1e-12, err <= 1e-12, "<="))
        if "profile_check" in ref:
            err = abs(ref["profile_check"] - ref["profile_expected"])
            w = {"case": key + "_profile", "value": ref["profile_check"], "expected": ref["profile_expected"]}
            report.checks.append(LemmaCheck("bernoulli_extremes", w, err, 1e-12, err <= 1e-12, "<="))
    return report
