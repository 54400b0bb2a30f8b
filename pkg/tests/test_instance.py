from __future__ import annotations

import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_min_cuts, floyd_warshall

from halftsp.generate import doubled_cycle, generate, k4_chain
from halftsp.instance import (
    InstanceError,
    build_support,
    ensure_unit_edge,
    load_instance,
    metric_closure,
    parse_instance,
    save_instance,
    validate,
)


def c5_half_edges():
    """Doubled C5 written with x=1 edges (the only duplicate-free encoding)."""
    return doubled_cycle(5)


def test_doubled_c5_is_valid():
    rep = validate(c5_half_edges())
    assert rep.ok and rep.min_cut == 4


def test_deleting_a_parallel_pair_breaks_degrees():
    data = c5_half_edges().to_dict()
    data["edges"] = data["edges"][1:]
    rep = validate(parse_instance(data))
    bad = sorted(v["vertex"] for v in rep.violations if v["kind"] == "degree")
    assert not rep.ok
    assert len(bad) == 2
    assert all(v["degree"] == 1.0 for v in rep.violations if v["kind"] == "degree")


def test_halving_one_pair_gives_degree_one_and_a_half():
    data = c5_half_edges().to_dict()
    data["edges"][0]["x"] = 0.5
    rep = validate(parse_instance(data))
    assert sorted(v["degree"] for v in rep.violations if v["kind"] == "degree") == [1.5, 1.5]


def test_two_k4_blocks_valid_and_brute_force_min_cut_four():
    sol = k4_chain(2)
    assert validate(sol).ok
    lam, _ = brute_min_cuts(sol.n, [(e.u, e.v) for e in sol.edges for _ in range(2 if e.x == 1 else 1)])
    assert lam == 4


@pytest.mark.parametrize(
    "data, message",
    [
        ({"edges": []}, "missing"),
        ({"n": 2, "edges": [{"u": 0, "v": 0, "x": 1, "cost": 1}]}, "self-loop"),
        ({"n": 2, "edges": [{"u": 0, "v": 5, "x": 1, "cost": 1}]}, "vertex id"),
        ({"n": 2, "edges": [{"u": 0, "v": 1, "x": 1, "cost": 1}, {"u": 1, "v": 0, "x": 1, "cost": 1}]}, "duplicate"),
        ({"n": 2, "edges": [{"u": 0, "v": 1, "x": 1, "cost": float("inf")}]}, "finite"),
        ({"n": 2, "edges": [], "matrix": [[0]]}, "matrix"),
    ],
)
def test_parse_rejects_malformed(data, message):
    with pytest.raises(InstanceError, match=message):
        parse_instance(data)


def test_validate_reports_non_half_integral_and_metric_problems():
    sol = doubled_cycle(3)
    data = sol.to_dict()
    data["edges"][0]["x"] = 0.3
    assert any(v["kind"] == "non_half_integral" for v in validate(parse_instance(data)).violations)
    data = sol.to_dict()
    data["matrix"] = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    kinds = {v["kind"] for v in validate(parse_instance(data)).violations}
    assert {"triangle_inequality", "cost_mismatch"} <= kinds


def test_existing_unit_edge_is_designated_unchanged():
    sol = doubled_cycle(8)
    out, idx = ensure_unit_edge(sol)
    assert out.n == 8 and out.edges == sol.edges
    assert (out.edges[idx].u, out.edges[idx].v) == (0, 1)


def test_explicit_unit_edge_3_7_is_kept():
    n = 8
    order = [0, 1, 2, 3, 7, 4, 5, 6]
    edges = [{"u": order[i], "v": order[(i + 1) % n], "x": 1.0, "cost": 1.0} for i in range(n)]
    sol = parse_instance({"n": n, "edges": edges})
    out, idx = ensure_unit_edge(sol)
    first_unit = min(
        range(len(out.edges)), key=lambda i: (min(out.edges[i].u, out.edges[i].v), max(out.edges[i].u, out.edges[i].v))
    )
    assert idx == first_unit
    # once designated, (3,7) survives re-designation untouched
    k = next(i for i, e in enumerate(sol.edges) if {e.u, e.v} == {3, 7})
    kept, idx2 = ensure_unit_edge(replace(sol, unit_edge=k))
    assert idx2 == k and kept.edges == sol.edges


def test_forced_split_of_c5_gives_six_vertices_and_keeps_cost():
    sol = doubled_cycle(5)
    out, idx = ensure_unit_edge(sol, force_split=True)
    assert out.n == 6
    assert out.edges[idx].x == 1.0 and out.edges[idx].cost == 0.0
    assert validate(out).ok
    ends = [(e.u, e.v) for e in out.edges for _ in range(2 if e.x == 1 else 1)]
    assert brute_min_cuts(out.n, ends)[0] == 4
    assert math.isclose(out.lp_cost, sol.lp_cost, rel_tol=0, abs_tol=0)
    assert out.origin == (0, 1, 2, 3, 4, 0)


def test_unit_edge_field_round_trips_and_is_checked():
    data = doubled_cycle(6).to_dict()
    data["unit_edge"] = 3
    sol = parse_instance(data)
    assert ensure_unit_edge(sol)[1] == 3 and sol.to_dict()["unit_edge"] == 3
    data["unit_edge"] = 9
    with pytest.raises(InstanceError, match="unit_edge"):
        parse_instance(data)
    half = k4_chain(2).to_dict()
    half["unit_edge"] = 0
    with pytest.raises(InstanceError, match="need 1"):
        parse_instance(half)


def test_split_of_all_half_chain_revalidates():
    sol = k4_chain(3)
    out, idx = ensure_unit_edge(sol)
    assert out.n == sol.n + 1 and validate(out).ok
    assert out.lp_cost == sol.lp_cost


def test_support_doubles_unit_edges():
    sol = parse_instance(
        {
            "n": 3,
            "edges": [
                {"u": 0, "v": 1, "x": 1.0, "cost": 5.0},
                {"u": 1, "v": 2, "x": 1.0, "cost": 1.0},
                {"u": 0, "v": 2, "x": 1.0, "cost": 2.0},
            ],
        }
    )
    G = build_support(ensure_unit_edge(sol)[0])
    assert G.m == 6
    assert [tuple(G.ends[h]) for h in (0, 1)] == [(0, 1), (0, 1)]
    assert G.costs[0] == G.costs[1] == 5.0
    assert G.e_plus == 0 and G.e_plus_twin == 1


def test_support_of_c5_is_4_regular():
    G = build_support(ensure_unit_edge(doubled_cycle(5))[0])
    assert G.m == 10
    assert np.all(np.bincount(G.ends.ravel(), minlength=5) == 4)


@pytest.mark.parametrize("kind, size", [("doubled-cycle", 7), ("k4-chain", 3), ("nested-cycle", 2), ("two-level", 0)])
def test_half_edge_count_and_cost_identity(kind, size):
    sol, _ = ensure_unit_edge(generate(kind, size, costs="euclidean", random_state=1))
    G = build_support(sol)
    assert G.m == 2 * sol.n
    assert math.isclose(math.fsum(G.costs) / 2, sol.lp_cost, rel_tol=1e-12)


def test_metric_closure_c5_and_diagonal():
    sol = ensure_unit_edge(doubled_cycle(5))[0]
    d = metric_closure(sol)
    assert d(0, 2) == 2.0
    assert all(d(u, u) == 0.0 for u in range(5))


def test_metric_closure_matches_floyd_warshall_on_two_blocks():
    sol = ensure_unit_edge(k4_chain(2))[0]
    d = metric_closure(sol)
    D = floyd_warshall(sol.n, [(e.u, e.v, e.cost) for e in sol.edges])
    assert np.allclose(d.dist, D)
    # frozen from the Floyd-Warshall oracle: opposite-block vertices not joined by a cross edge
    assert D[1, 4] == 2.0 and D[1, 5] == 1.0


def test_paths_realise_distances():
    sol = ensure_unit_edge(k4_chain(3, costs="euclidean", random_state=4))[0]
    d = metric_closure(sol)
    for a, b in [(0, 5), (2, 11), (3, 9)]:
        p = d.path(a, b)
        assert p[0] == a and p[-1] == b
        assert math.isclose(sum(d(x, y) for x, y in zip(p, p[1:])), d(a, b), rel_tol=1e-9)


def test_round_trip(tmp_path):
    sol = k4_chain(2, costs="euclidean", random_state=3)
    path = tmp_path / "inst.json"
    save_instance(sol, path)
    back = load_instance(path)
    assert back.edges == sol.edges and np.array_equal(back.matrix, sol.matrix)
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(InstanceError):
        load_instance(tmp_path / "bad.json")
    assert json.loads(path.read_text())["n"] == sol.n


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 12), seed=st.integers(0, 2**32 - 1))
def test_random_cycles_satisfy_cost_identity(n, seed):
    sol = ensure_unit_edge(doubled_cycle(n, costs="euclidean", random_state=seed))[0]
    assert validate(sol).ok
    G = build_support(sol)
    assert math.isclose(math.fsum(G.costs) / 2, sol.lp_cost, rel_tol=1e-12)
