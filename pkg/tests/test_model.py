"""Tests for instance containers, validation, simulation and JSON IO."""

import numpy as np
import pytest

from tmiqp.instances import builtin_instances, example2, get_builtin, illustrative
from tmiqp.model import (ConstraintSet, LinearDynamics, MiocpInstance,
                         StageCost, Trajectory, instance_from_dict,
                         instance_to_dict, instances_equal, load_instance,
                         save_instance, simulate, total_cost, validate)


def test_dynamics_shape_checks():
    with pytest.raises(ValueError):
        LinearDynamics(A=[[1.0, 0.0]], B1=[[1.0]], B2=[[1.0]])
    with pytest.raises(ValueError):
        LinearDynamics(A=[[1.0]], B1=[[1.0], [0.0]], B2=[[1.0]])
    with pytest.raises(ValueError):
        LinearDynamics(A=[[1.0]], B1=[[1.0]], B2=[[1.0]], c=[0.0, 0.0])
    d = LinearDynamics(A=[[2.0]], B1=[[1.0]], B2=[[1.0]], c=[-1.0])
    assert (d.n_x, d.n_u, d.n_v) == (1, 1, 1)


def test_stage_cost_value():
    sc = StageCost(Q=[[2.0]], R=[[1.0, 0.0], [0.0, 0.5]],
                   q=[1.0], r=[0.0, 0.0], constant=3.0)
    # x'Qx + q'x + w'Rw + r'w + const at x=2, w=(1, 2)
    val = sc.value(np.array([2.0]), np.array([1.0, 2.0]))
    assert abs(val - (8.0 + 2.0 + 1.0 + 2.0 + 3.0)) < 1e-12


def test_validate_clean_builtins():
    for inst in builtin_instances().values():
        assert validate(inst) == []


def test_validate_flags_dimension_mismatch():
    inst = illustrative(N=3, x0=0.0)
    bad = MiocpInstance(dyn=inst.dyn, stage_costs=inst.stage_costs[:2],
                        terminal_cost=inst.terminal_cost,
                        constraints=inst.constraints, N=3, x0=inst.x0)
    assert any("stage_costs" in msg or "cost" in msg for msg in validate(bad))


def test_simulate_and_total_cost():
    inst = illustrative(N=2, x0=2.0)
    traj = simulate(inst, u_seq=[[0.0], [0.0]], v_seq=[[0.0], [0.0]])
    # x+ = 2x + u + v - 1: 2 -> 3 -> 5
    assert np.allclose(traj.x.reshape(-1), [2.0, 3.0, 5.0])
    # cost u^2 + v^2/2 is zero along this trajectory
    assert abs(total_cost(inst, traj)) < 1e-12
    traj2 = simulate(inst, u_seq=[[1.0], [-1.0]], v_seq=[[1.0], [0.0]])
    assert abs(total_cost(inst, traj2) - (1.0 + 0.5 + 1.0)) < 1e-12


def test_trajectory_shape_guard():
    with pytest.raises(ValueError):
        Trajectory(x=np.zeros((3, 1)), u=np.zeros((1, 1)), v=np.zeros((2, 1)))


@pytest.mark.parametrize("name", ["illustrative", "example1", "example2"])
def test_json_round_trip(name, tmp_path):
    inst = get_builtin(name)
    path = tmp_path / f"{name}.json"
    save_instance(inst, path)
    again = load_instance(path)
    assert instances_equal(inst, again)


def test_round_trip_preserves_infinite_bounds():
    inst = example2(n_x=2, N=4)
    d = instance_to_dict(inst)
    again = instance_from_dict(d)
    assert np.all(np.isinf(again.constraints.x_hi))
    assert instances_equal(inst, again)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_instance(tmp_path / "nope.json")


def test_malformed_instance_dict():
    with pytest.raises((KeyError, ValueError)):
        instance_from_dict({"A": [[1.0]]})


def test_constraint_set_hull():
    cs = ConstraintSet(x_lo=[-1.0], x_hi=[1.0], u_lo=[-1.0], u_hi=[1.0],
                       v_sets=[(-1, 0, 1), (0, 2)])
    lo, hi = cs.v_hull()
    assert np.allclose(lo, [-1.0, 0.0])
    assert np.allclose(hi, [1.0, 2.0])
