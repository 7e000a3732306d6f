"""Tests for the command-line harness (run in process via main(argv))."""

import csv
import json

import pytest

from tmiqp.cli import (EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OPTIMAL,
                       EXIT_SUBOPTIMAL, main)


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_builtin_optimal(capsys):
    code, out, _ = _run(capsys, ["solve", "--builtin", "illustrative",
                                 "--horizon", "4", "--x0", "2"])
    assert code == EXIT_OPTIMAL
    payload = json.loads(out)
    assert payload["status"] == "optimal"
    assert payload["nodes"] >= 1
    assert len(payload["trajectory"]["v"]) == 4


def test_solve_node_limit_suboptimal(capsys):
    code, out, _ = _run(capsys, ["solve", "--builtin", "illustrative",
                                 "--horizon", "5", "--x0", "2",
                                 "--node-limit", "1"])
    assert code == EXIT_SUBOPTIMAL
    assert json.loads(out)["status"] == "suboptimal"


def test_solve_weighted_needs_guess_source(capsys):
    code, _, err = _run(capsys, ["solve", "--builtin", "illustrative",
                                 "--strategy", "weighted"])
    assert code == EXIT_ERROR
    assert "weighted" in err


def test_solve_weighted_recipe_and_trace(capsys, tmp_path):
    code, out, _ = _run(capsys, [
        "solve", "--builtin", "example2", "--nx", "2", "--horizon", "6",
        "--x0", "0.5", "--strategy", "weighted", "--recipe", "tail:2",
        "--trace", "--out", str(tmp_path)])
    assert code == EXIT_OPTIMAL
    lines = (tmp_path / "trace.jsonl").read_text().strip().splitlines()
    assert len(lines) == json.loads(out)["nodes"]
    rec = json.loads(lines[0])
    assert {"node", "U", "L", "action"} <= set(rec)


def test_solve_instance_file_and_guess_file(capsys, tmp_path):
    code, _, _ = _run(capsys, ["instances", "--out", str(tmp_path)])
    assert code == EXIT_OPTIMAL
    guesses = [{"V": [[0]] * 4, "w": 10.0}]
    gpath = tmp_path / "guesses.json"
    gpath.write_text(json.dumps(guesses))
    code, out, _ = _run(capsys, [
        "solve", "--instance", str(tmp_path / "illustrative.json"),
        "--horizon", "4", "--x0", "1", "--strategy", "weighted",
        "--guesses", str(gpath)])
    assert code == EXIT_OPTIMAL
    assert abs(json.loads(out)["J"]) < 1e-8


def test_solve_bad_inputs(capsys, tmp_path):
    code, _, err = _run(capsys, ["solve", "--builtin", "nope"])
    assert code == EXIT_ERROR and "nope" in err
    code, _, err = _run(capsys, ["solve", "--instance", "missing.json",
                                 "--builtin", "illustrative"])
    assert code == EXIT_ERROR and "not both" in err
    code, _, err = _run(capsys, ["solve", "--builtin", "example2",
                                 "--nx", "3", "--x0", "1,2"])
    assert code == EXIT_ERROR and "components" in err


def test_bench_writes_csvs_and_is_deterministic(capsys, tmp_path):
    argv = ["bench", "--builtin", "example2", "--nx", "2",
            "--horizons", "5", "--x0-lin", "-0.5", "0.5", "3",
            "--x0-noise", "0.05", "--seed", "7", "--recipe", "tail:2",
            "--out", str(tmp_path / "a")]
    code, out, _ = _run(capsys, argv)
    assert code == EXIT_OPTIMAL
    assert json.loads(out)["cells"] == 6  # 2 strategies x 1 horizon x 3 x0

    def read_rows(d):
        with open(d / "runs.csv") as fh:
            fh.readline()  # comment line documenting subopt semantics
            return list(csv.DictReader(fh))

    rows = read_rows(tmp_path / "a")
    assert {r["strategy"] for r in rows} == {"std", "weighted"}
    assert all(abs(float(r["subopt"])) < 1e-6 for r in rows)
    with open(tmp_path / "a" / "aggregate.csv") as fh:
        agg = list(csv.DictReader(fh))
    assert {a["strategy"] for a in agg} == {"std", "weighted"}
    assert all(float(a["median_nodes"]) >= 1 for a in agg)

    argv[-1] = str(tmp_path / "b")
    code, _, _ = _run(capsys, argv)
    assert code == EXIT_OPTIMAL
    rows_b = read_rows(tmp_path / "b")
    skip = {"wall_ms"}  # identical runs modulo timing
    for r1, r2 in zip(rows, rows_b):
        assert {k: v for k, v in r1.items() if k not in skip} == \
               {k: v for k, v in r2.items() if k not in skip}


def test_bench_noise_requires_seed(capsys, tmp_path):
    code, _, err = _run(capsys, ["bench", "--builtin", "example2", "--nx", "2",
                                 "--horizons", "4", "--x0-lin", "0", "0", "1",
                                 "--x0-noise", "0.1",
                                 "--out", str(tmp_path)])
    assert code == EXIT_ERROR and "seed" in err


def test_turnpike_outputs(capsys, tmp_path):
    code, out, _ = _run(capsys, ["turnpike", "--builtin", "illustrative",
                                 "--x0-list", "2", "--horizons", "8,12",
                                 "--eps", "0.1,0.5",
                                 "--out", str(tmp_path)])
    assert code == EXIT_OPTIMAL
    info = json.loads(out)
    with open(info["csv"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    head = json.loads(open(info["json"]).read())
    assert head["v_bar"] == [0.0]
    assert (tmp_path / "traj_x00_N8.csv").exists()
    assert (tmp_path / "traj_x00_N12.csv").exists()


def test_certify_output(capsys):
    code, out, _ = _run(capsys, ["certify", "--builtin", "illustrative"])
    assert code == EXIT_OPTIMAL
    payload = json.loads(out)
    assert payload["status"] == "certified"
    # A=2, Q=0 scalar: P = -eps/3
    assert abs(payload["P"][0][0] + payload["eps"] / 3.0) < 1e-10


def test_instances_listing(capsys):
    code, out, _ = _run(capsys, ["instances"])
    assert code == EXIT_OPTIMAL
    assert "illustrative" in out and "example1" in out and "example2" in out


def test_infeasible_exit_code(capsys, tmp_path):
    code, _, _ = _run(capsys, ["instances", "--out", str(tmp_path)])
    path = tmp_path / "illustrative.json"
    data = json.loads(path.read_text())
    data["x_bounds"] = [[-3.0], [-2.5]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, out, _ = _run(capsys, ["solve", "--instance", str(bad),
                                 "--horizon", "3", "--x0", "2"])
    assert code == EXIT_INFEASIBLE
    assert json.loads(out)["status"] == "infeasible"
