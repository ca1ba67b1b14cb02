"""End-to-end command-line behavior: outputs, determinism, exit codes."""

import json
import subprocess
import sys
from fractions import Fraction as F

import pytest
from click.testing import CliRunner

import ift
from ift import serialize
from ift.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def write_tree(tmp_path, tree, name="tree.json"):
    path = tmp_path / name
    serialize.save_tree(tree, path)
    return path


def simple_cat():
    return ift.InfoFlowTree(
        (0, 1, 2, 3), ((0, 1, F(1, 3)), (0, 2, F(1, 2)), (1, 3, F(-3, 4)))
    )


def test_validate_ok(runner, tmp_path):
    path = write_tree(tmp_path, simple_cat())
    result = runner.invoke(cli, ["validate", "--in", str(path)])
    assert result.exit_code == 0
    assert json.loads(result.output) == {"valid": True, "violations": []}


def test_validate_reports_violations(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"vertices": [1], "edges": []}))
    result = runner.invoke(cli, ["validate", "--in", str(path)])
    assert result.exit_code == 6
    assert not json.loads(result.output)["valid"]


def test_dist_dp_and_bruteforce_agree(runner, tmp_path):
    path = write_tree(tmp_path, simple_cat())
    out1 = tmp_path / "d1.json"
    out2 = tmp_path / "d2.json"
    assert runner.invoke(cli, ["dist", "--in", str(path), "--out", str(out1)]).exit_code == 0
    assert (
        runner.invoke(
            cli, ["dist", "--in", str(path), "--out", str(out2), "--method", "bruteforce"]
        ).exit_code
        == 0
    )
    assert out1.read_text() == out2.read_text()


def test_cond_cov_empty_conditioning(runner, tmp_path):
    path = write_tree(tmp_path, simple_cat())
    report = tmp_path / "rep.json"
    result = runner.invoke(
        cli,
        ["cond-cov", "--in", str(path), "--u", "2", "--v", "3",
         "--condition-on", "", "--report", str(report)],
    )
    assert result.exit_code == 0
    payload = json.loads(report.read_text())
    assert payload["expectation"] == "1/8"  # |1/2 * 1/3 * 3/4|


def test_cond_cov_all_other_leaves(runner, tmp_path):
    tree = ift.InfoFlowTree(
        (0, 1, 2, 3, 4, 5),
        ((0, 1, F(1, 2)), (1, 2, F(1, 4)), (0, 3, F(1, 8)), (1, 4, F(3, 8)), (2, 5, F(5, 8))),
    )
    path = write_tree(tmp_path, tree)
    report = tmp_path / "rep.json"
    result = runner.invoke(
        cli, ["cond-cov", "--in", str(path), "--u", "3", "--v", "5", "--report", str(report)]
    )
    assert result.exit_code == 0
    payload = json.loads(report.read_text())
    assert payload["conditioning"] == [4]
    expected = ift.expected_abs_cond_cov(tree, 3, 5, (4,))
    assert F(payload["expectation"]) == expected.expectation


def test_metrics_on_parity_distribution(runner, tmp_path):
    dist_path = tmp_path / "parity.json"
    serialize.save_distribution(ift.parity_counterexample(2), dist_path)
    out = tmp_path / "series.csv"
    result = runner.invoke(
        cli,
        ["metrics", "--in", str(dist_path), "--metric", "avgcovcond",
         "--t-range", "0..2", "--out", str(out)],
    )
    assert result.exit_code == 0
    lines = out.read_text().strip().splitlines()
    assert lines == ["metric,t,value", "avgcovcond,0,0", "avgcovcond,1,0", "avgcovcond,2,1"]


def test_counterexample_then_metrics(runner, tmp_path):
    dist_path = tmp_path / "cex.json"
    assert (
        runner.invoke(cli, ["counterexample", "-t", "2", "--out", str(dist_path)]).exit_code == 0
    )
    assert serialize.load_distribution(dist_path) == ift.parity_counterexample(2)


def test_metrics_accepts_tree_input(runner, tmp_path):
    path = write_tree(tmp_path, simple_cat())
    out = tmp_path / "series.csv"
    result = runner.invoke(
        cli,
        ["metrics", "--in", str(path), "--metric", "avgcov", "--t-range", "0..0",
         "--out", str(out)],
    )
    assert result.exit_code == 0
    assert out.read_text().startswith("metric,t,value\navgcov,0,")


def test_transform_simple_caterpillar(runner, tmp_path):
    spine = [(i, i + 1, "1/2") for i in range(4)]
    leaves = []
    nxt = 5
    for i, c in enumerate([2, 1, 3, 1, 2]):
        for _ in range(c):
            leaves.append((i, nxt, "-1/3"))
            nxt += 1
    path = tmp_path / "cat.json"
    path.write_text(
        json.dumps(
            {
                "vertices": list(range(nxt)),
                "edges": [[u, v, r] for u, v, r in spine + leaves],
            }
        )
    )
    out = tmp_path / "out.json"
    trace = tmp_path / "trace.json"
    result = runner.invoke(
        cli,
        ["transform", "--rule", "simple-caterpillar", "--in", str(path),
         "--out", str(out), "--trace", str(trace)],
    )
    assert result.exit_code == 0
    produced = serialize.load_tree(out)
    assert ift.validate(produced) == []
    assert ift.is_simple_caterpillar(produced)
    assert ift.check_equivalence(serialize.load_tree(path), produced)
    assert json.loads(trace.read_text())["steps"]


def test_transform_primitive_rules(runner, tmp_path):
    tree = ift.InfoFlowTree((1, 2, 3), ((1, 2, F(1, 2)), (2, 3, F(1, 3))))
    path = write_tree(tmp_path, tree)
    out = tmp_path / "out.json"
    result = runner.invoke(
        cli,
        ["transform", "--rule", "merge", "--vertex", "2", "--in", str(path), "--out", str(out)],
    )
    assert result.exit_code == 0
    assert serialize.load_tree(out).edges == ((1, 3, F(1, 6)),)

    result = runner.invoke(
        cli,
        ["transform", "--rule", "split-edge", "--edge", "1,2", "--rho1", "1", "--rho2", "1/2",
         "--in", str(path), "--out", str(out)],
    )
    assert result.exit_code == 0
    assert ift.check_equivalence(serialize.load_tree(out), tree)


def test_bound_command(runner):
    result = runner.invoke(cli, ["bound", "--alpha", "2.0"])
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert abs(payload["bound"] - ift.star_bound(2.0)) < 1e-15


def test_scan_command_deterministic(runner, tmp_path):
    out1 = tmp_path / "a.jsonl"
    out2 = tmp_path / "b.jsonl"
    args = ["scan", "--family", "simple-caterpillar", "--trials", "8",
            "--seed", "3", "--max-size", "6"]
    r1 = runner.invoke(cli, args + ["--out", str(out1)])
    r2 = runner.invoke(cli, args + ["--out", str(out2)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()
    summary = json.loads(r1.output)
    assert summary["violations"] == 0
    records = [json.loads(l) for l in out1.read_text().strip().splitlines()]
    assert len(records) == 8


def test_sample_command_deterministic(runner, tmp_path):
    path = write_tree(tmp_path, simple_cat())
    out1 = tmp_path / "s1.jsonl"
    out2 = tmp_path / "s2.jsonl"
    args = ["sample", "--in", str(path), "--seed", "7", "--n", "5"]
    assert runner.invoke(cli, args + ["--out", str(out1)]).exit_code == 0
    assert runner.invoke(cli, args + ["--out", str(out2)]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()
    row = json.loads(out1.read_text().splitlines()[0])
    assert set(row) == {"seed", "draw", "values"}
    assert row["values"]["0-1"] == row["values"]["0"] * row["values"]["1"]


# -----------------------------------------------------------------------------
# exit codes
# -----------------------------------------------------------------------------
def test_missing_file_is_io_error(runner, tmp_path):
    result = runner.invoke(cli, ["validate", "--in", str(tmp_path / "absent.json")])
    assert result.exit_code == 4


def test_malformed_json_is_format_error(runner, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    result = runner.invoke(cli, ["validate", "--in", str(path)])
    assert result.exit_code == 3
    err = json.loads(result.stderr)
    assert err["error"] == "FormatError"


def test_cap_violation_exit_code(runner, tmp_path):
    tree = ift.InfoFlowTree(
        tuple(range(8)), tuple((0, i, F(1, 2)) for i in range(1, 8))
    )
    path = write_tree(tmp_path, tree)
    result = runner.invoke(
        cli, ["dist", "--in", str(path), "--out", str(tmp_path / "d.json"), "--max-leaves", "3"]
    )
    assert result.exit_code == 5


def test_invalid_tree_exit_code(runner, tmp_path):
    path = tmp_path / "cyclic.json"
    path.write_text(
        json.dumps(
            {
                "vertices": [1, 2, 3],
                "edges": [[1, 2, 0.5], [2, 3, 0.5], [3, 1, 0.5]],
            }
        )
    )
    result = runner.invoke(
        cli, ["dist", "--in", str(path), "--out", str(tmp_path / "d.json")]
    )
    assert result.exit_code == 6


def test_module_entry_point(tmp_path):
    tree_path = tmp_path / "t.json"
    serialize.save_tree(simple_cat(), tree_path)
    proc = subprocess.run(
        [sys.executable, "-m", "ift", "validate", "--in", str(tree_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["valid"]
