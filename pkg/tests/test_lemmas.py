from __future__ import annotations

import json
import math

import pytest
from conftest import fitted
from oracles import one_tree_law

from halftsp.analysis import lemma_suite
from halftsp.analysis.lemmas import BOUNDS


@pytest.mark.parametrize("name", ["doubled-cycle-5", "k4-chain-2", "k4-chain-4", "nested-cycle-2", "two-level"])
def test_exact_suite_passes(name):
    model = fitted(name)
    rep = lemma_suite(model.hierarchy_, model.distributions_)
    assert rep.passed, [c for c in rep.checks if not c.passed][:3]
    assert rep.method == "exact" and not any(c.statistical for c in rep.checks if c.name != "real_rooted")
    s = rep.summary()
    assert s["min_cut_even"]["witnesses"] == len(model.hierarchy_.all_min_cuts())
    assert s["bernoulli_extremes"]["failed"] == 0


def test_cycle_instances_check_partner_pairs():
    model = fitted("two-level")
    rep = lemma_suite(model.hierarchy_, model.distributions_)
    assert len(rep.by_name("partner_pairs")) >= 2
    assert all(c.bound == BOUNDS["partner_pairs"] for c in rep.by_name("partner_pairs"))


def test_witness_values_match_enumeration():
    model = fitted("k4-chain-2")
    H = model.hierarchy_
    law = one_tree_law(H, model.distributions_)
    rep = lemma_suite(H, model.distributions_)
    for c in rep.by_name("min_cut_even"):
        cut = frozenset(c.witness["cut"])
        want = math.fsum(q for T, q in law if len(T & cut) % 2 == 0)
        assert c.value == pytest.approx(want, abs=1e-9)
    for c in rep.by_name("three_set_two"):
        edges = frozenset(c.witness["edges"])
        want = math.fsum(q for T, q in law if len(T & edges) == 2)
        assert c.value == pytest.approx(want, abs=1e-9)
    # the exactly-two bound is attained by the symmetric K4 block
    assert min(c.value for c in rep.by_name("three_set_two")) == pytest.approx(3 / 8, abs=1e-12)


def test_monte_carlo_suite_passes_and_reports_intervals():
    model = fitted("k4-chain-2")
    rep = lemma_suite(model.hierarchy_, model.distributions_, method="mc", n_trials=3000, seed=4)
    assert rep.passed and rep.trials == 3000
    stat = [c for c in rep.checks if c.statistical and c.interval is not None]
    assert stat and all(c.interval[0] <= c.value <= c.interval[1] for c in stat)
    with pytest.raises(ValueError):
        lemma_suite(model.hierarchy_, model.distributions_, method="mc")


def test_report_serialises():
    model = fitted("nested-cycle-2")
    d = lemma_suite(model.hierarchy_, model.distributions_).to_dict()
    back = json.loads(json.dumps(d, allow_nan=False))
    assert back["passed"] is True and set(BOUNDS) - {"top_edge"} <= set(back["summary"])
