"""Tests for steady-state computation and turnpike diagnostics."""

import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmiqp.bnb import solve_bnb
from tmiqp.instances import example1, example2, illustrative
from tmiqp.model import Trajectory, simulate
from tmiqp.turnpike import (SteadyState, check_integer_turnpike, compute_Q_eps,
                            deviation, solve_steady_state, turnpike_profile,
                            write_report)


def test_illustrative_steady_state_exact():
    # x = 2x + u + v - 1 with zero state cost: (x, u, v) = (1, 0, 0), cost 0
    ss = solve_steady_state(illustrative())
    assert np.allclose(ss.x_bar, [1.0])
    assert np.allclose(ss.u_bar, [0.0])
    assert np.allclose(ss.v_bar, [0.0])
    assert abs(ss.cost) < 1e-9


def test_example1_steady_state_golden():
    # stationarity of x = x1 + x2 + v with branch constraints active:
    # best point is v=1, x = 1/26, x1 = 1/130, x2 = 1/26
    ss = solve_steady_state(example1())
    assert np.allclose(ss.v_bar, [1.0])
    assert abs(ss.x_bar[0] - 1.0 / 26.0) < 1e-7
    assert np.allclose(ss.u_bar, [1.0 / 130.0, 1.0 / 26.0], atol=1e-7)
    assert abs(ss.cost - (-16.0 / 104.0)) < 1e-7


@pytest.mark.parametrize("n_x", [2, 3, 5])
def test_example2_steady_state_closed_form(n_x):
    # shift dynamics force x_bar = u_bar * ones; minimizing
    # 10*n_x*u^2 + u over the line gives u_bar = -1/(20*(n_x+1))
    ss = solve_steady_state(example2(n_x=n_x))
    u_ref = -1.0 / (20.0 * (n_x + 1))
    assert np.allclose(ss.v_bar, np.zeros(1))
    assert abs(ss.u_bar[0] - u_ref) < 1e-8
    assert np.allclose(ss.x_bar, u_ref * np.ones(n_x), atol=1e-8)


def test_deviation_and_Q_eps():
    inst = illustrative(N=4, x0=1.0)
    traj = simulate(inst, u_seq=[[0.0]] * 4, v_seq=[[0.0]] * 4)
    ss = solve_steady_state(inst)
    assert all(deviation(traj, ss, k) < 1e-8 for k in range(4))
    assert compute_Q_eps(traj, ss, 0.5) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        compute_Q_eps(traj, ss, 0.0)


def test_check_integer_turnpike_guards_and_verdicts():
    inst = illustrative(N=3, x0=1.0)
    ss = solve_steady_state(inst)
    good = simulate(inst, u_seq=[[0.0]] * 3, v_seq=[[0.0]] * 3)
    assert check_integer_turnpike(good, ss, 0.5)
    # v=1, u=-1 keeps x at the steady state but the triplet deviation is 1,
    # so with eps < 1 those stages cannot enter Q_eps at all: the ball
    # itself excludes any wrong integer decision
    bad = simulate(inst, u_seq=[[-1.0]] * 3, v_seq=[[1.0]] * 3)
    assert compute_Q_eps(bad, ss, 0.5) == []
    assert check_integer_turnpike(bad, ss, 0.5)
    with pytest.raises(ValueError):
        check_integer_turnpike(good, ss, 1.5)
    frac = Trajectory(x=good.x, u=good.u, v=good.v + 0.4)
    with pytest.raises(ValueError):
        check_integer_turnpike(frac, ss, 0.5)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.45), st.floats(0.5, 0.95))
def test_Q_eps_nesting_property(eps_small, eps_big):
    inst = illustrative(N=6, x0=2.0)
    res = solve_bnb(inst)
    ss = solve_steady_state(inst)
    small = set(compute_Q_eps(res.traj, ss, eps_small))
    big = set(compute_Q_eps(res.traj, ss, eps_big))
    assert small <= big


def test_profile_and_report(tmp_path):
    inst = illustrative()
    report = turnpike_profile(inst, x0_list=[2.0], N_list=[8, 12],
                              eps_grid=[0.1, 0.5], keep_traj=True)
    assert len(report.cells) == 4
    for cell in report.cells:
        assert cell["status"] == "optimal"
        assert cell["out_count"] == cell["N"] - len(
            compute_Q_eps(cell["traj"], report.z_bar, cell["eps"]))
    # longer horizon must not add near-steady-state exits (N-boundedness)
    by_eps = {}
    for cell in report.cells:
        by_eps.setdefault(cell["eps"], {})[cell["N"]] = cell["out_count"]
    for counts in by_eps.values():
        assert counts[12] - counts[8] <= 2
    assert report.C_fit >= 0.0

    csv_path = tmp_path / "turnpike.csv"
    json_path = tmp_path / "turnpike.json"
    write_report(report, csv_path, json_path)
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 4
    assert {"x0_id", "N", "eps", "out_count"} <= set(rows[0])
    head = json.loads(json_path.read_text())
    assert np.allclose(head["x_bar"], [1.0])
    assert "C_fit" in head


def test_optimal_trajectory_enters_turnpike():
    inst = illustrative()
    ss = solve_steady_state(inst)
    res = solve_bnb(illustrative(N=12, x0=2.0))
    assert res.status == "optimal"
    inside = compute_Q_eps(res.traj, ss, 0.1)
    assert len(inside) >= 6
    assert check_integer_turnpike(res.traj, ss, 0.5)
