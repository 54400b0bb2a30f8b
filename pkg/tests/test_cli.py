from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from halftsp.cli import main
from halftsp.generate import doubled_cycle, k4_chain
from halftsp.instance import save_instance


def run(*argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


@pytest.fixture
def c5(tmp_path):
    path = tmp_path / "c5.json"
    save_instance(doubled_cycle(5), path)
    return path


@pytest.fixture
def blocks(tmp_path):
    path = tmp_path / "blocks.json"
    save_instance(k4_chain(2, costs="euclidean", random_state=2), path)
    return path


def test_validate(c5, tmp_path):
    code, text = run("validate", c5)
    assert code == 0 and json.loads(text)["valid"] is True
    data = json.loads(c5.read_text())
    data["edges"] = data["edges"][1:]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(data))
    code, text = run("validate", broken)
    assert code == 1 and json.loads(text)["violations"]


def test_usage_and_input_errors(c5, tmp_path):
    assert run("solve", c5)[0] == 2  # no seed
    assert run("sample", c5)[0] == 2
    assert run("validate", tmp_path / "missing.json")[0] == 2
    (tmp_path / "junk.json").write_text("{")
    assert run("validate", tmp_path / "junk.json")[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("solve", c5, "--seed", 1, "--trials", 0)[0] == 2
    assert run("generate", "k4-chain", "--size", 99)[0] == 2
    assert run("generate", "k4-chain", "--costs", "euclidean")[0] == 2


def test_generate_round_trips(tmp_path):
    out = tmp_path / "g.json"
    code, _ = run("generate", "nested-cycle", "--size", 2, "--costs", "euclidean", "--seed", 3, "-o", out)
    assert code == 0 and run("validate", out)[0] == 0
    code, text = run("generate", "doubled-cycle")
    assert code == 0 and json.loads(text)["n"] == 5


def test_hierarchy_of_c5_is_root_only(c5, tmp_path):
    dot = tmp_path / "h.dot"
    code, text = run("hierarchy", c5, "--dot", dot)
    d = json.loads(text)
    assert code == 0 and d["violations"] == []
    assert sorted({n["kind"] for n in d["nodes"]}) == ["leaf", "root"]
    assert dot.read_text().startswith("digraph")


def test_sample_emits_json_lines(c5):
    code, text = run("sample", c5, "--count", 3, "--seed", 9)
    lines = [json.loads(x) for x in text.splitlines()]
    assert code == 0 and len(lines) == 3
    assert all(len(x["edges"]) == 5 and x["odd"] == [] for x in lines)
    assert text == run("sample", c5, "--count", 3, "--seed", 9)[1]


def test_solve_csv_and_json_carry_the_same_numbers(blocks):
    code, js = run("solve", blocks, "--seed", 5, "--trials", 12, "--jobs", 1)
    assert code == 0
    res = json.loads(js)
    code, text = run("solve", blocks, "--seed", 5, "--trials", 12, "--jobs", 1, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 12 + 5
    for rec, row in zip(res["records"], rows):
        for k in ("treeCost", "joinCost", "tourCost", "ratio"):
            assert float(row[k]) == rec[k]
        assert int(row["nOdd"]) == rec["nOdd"]
    stats = {row["trial"]: row for row in rows[12:]}
    assert float(stats["mean"]["ratio"]) == res["summary"]["ratio"]["mean"]
    assert float(stats["ci99_high"]["tourCost"]) == res["summary"]["tourCost"]["ci99"][1]


def test_solve_is_bit_identical_across_jobs(blocks):
    outs = {run("solve", blocks, "--seed", 77, "--trials", 30, "--jobs", j, "--tours", 2)[1] for j in (1, 2, 3)}
    assert len(outs) == 1
    res = json.loads(outs.pop())
    assert res["seed"] == 77 and res["epsilon"] == 1e-3 and len(res["tours"]) == 2


def test_doubled_cycle_solves_to_ratio_one(c5):
    res = json.loads(run("solve", c5, "--seed", 1, "--trials", 10, "--jobs", 1)[1])
    assert all(r["ratio"] == 1.0 for r in res["records"])


def test_verify_lemmas(blocks):
    code, text = run("verify-lemmas", blocks, "--expectations")
    d = json.loads(text)
    assert code == 0 and d["passed"] is True
    code, text = run("verify-lemmas", blocks, "--method", "mc", "--trials", 500, "--seed", 2)
    assert code == 0
    assert run("verify-lemmas", blocks, "--method", "mc")[0] == 2


def test_bench_rows():
    code, text = run("bench", "--seed", 1, "--trials", 20, "--kinds", "doubled-cycle", "--jobs", 1)
    rows = json.loads(text)["instances"]
    assert code == 0 and len(rows) == 10
    assert all(r["meanRatio"] == 1.0 and r["withinBound"] for r in rows)
    assert run("bench", "--trials", 5)[0] == 2


def test_module_entry_point(c5):
    proc = subprocess.run([sys.executable, "-m", "halftsp", "validate", str(c5)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["valid"]
