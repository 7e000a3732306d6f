"""Built-in benchmark instances.

Three families:
- illustrative: scalar unstable system x+ = 2x + u + v - 1 with cost
  u^2 + v^2/2, v in {-1, 0, 1}; the optimal steady state is (1, 0, 0).
- example1: piecewise-linear scalar system reformulated as a mixed
  integer system; the sign-switch state x2 is modeled as a second
  continuous control tied to x1 by per-stage mixed rows, v in {0, 1}
  selects the sign branch.  The final stage carries its own cost vector.
- example2: chain-of-integrators shift system of configurable dimension,
  unconstrained x and u, v in {0, 1} pushing every state.
"""

from __future__ import annotations

import numpy as np

from .model import (ConstraintSet, LinearDynamics, MiocpInstance, MixedRow,
                    StageCost)

_INF = float("inf")


def illustrative(N: int = 30, x0: float = 2.0) -> MiocpInstance:
    dyn = LinearDynamics(A=[[2.0]], B1=[[1.0]], B2=[[1.0]], c=[-1.0])
    cost = StageCost(Q=[[0.0]], R=[[1.0, 0.0], [0.0, 0.5]])
    term = StageCost(Q=[[0.0]], R=np.zeros((2, 2)))
    cs = ConstraintSet(x_lo=[-2.0], x_hi=[2.0], u_lo=[-3.0], u_hi=[3.0],
                       v_sets=[(-1, 0, 1)])
    return MiocpInstance(dyn=dyn, stage_costs=[cost] * N, terminal_cost=term,
                         constraints=cs, N=N, x0=[float(x0)],
                         name="illustrative")


def example1(N: int = 20, x0: float = 1.0) -> MiocpInstance:
    """Piecewise dynamics x1+ = +-0.8 x1 + u with the sign selected by the
    integer v: controls are (u, x2) where x2 = sign-adjusted copy of x1
    enforced by the mixed rows, and x1+ = 0.8 x2 + u."""
    x_lo, x_hi = -1.0, 1.0
    dyn = LinearDynamics(A=[[0.0]], B1=[[1.0, 0.8]], B2=[[0.0]])

    def cost_vec(l):
        # l acts on [x1, x1^2, u, u^2]; x2 and v are cost-free
        return StageCost(Q=[[l[1]]],
                         R=np.diag([l[3], 0.0, 0.0]),
                         q=[l[0]], r=[l[2], 0.0, 0.0])

    stage = cost_vec([-10.0, 100.0, 10.0, 100.0])
    final = cost_vec([-1000.0, 100.0, 10.0, 100.0])
    term = StageCost(Q=[[0.0]], R=np.zeros((3, 3)))

    # Branch-selection rows; with v = 1: x2 = x1 in [0, 1], with v = 0:
    # x2 = -x1 in [-1, 0] (x bounds +-1 substituted).
    mixed = (
        MixedRow(gx=[1.0], gu=[0.0, 1.0], gv=[-2.0 * x_lo], lo=0.0),
        MixedRow(gx=[1.0], gu=[0.0, 1.0], gv=[-2.0 * x_hi], hi=0.0),
        MixedRow(gx=[-1.0], gu=[0.0, 1.0], gv=[-2.0 * x_hi], lo=-2.0 * x_hi),
        MixedRow(gx=[-1.0], gu=[0.0, 1.0], gv=[-2.0 * x_lo], hi=-2.0 * x_lo),
        MixedRow(gx=[1.0], gu=[0.0, 0.0], gv=[x_lo], lo=x_lo),
        MixedRow(gx=[1.0], gu=[0.0, 0.0], gv=[-x_hi], hi=0.0),
    )
    cs = ConstraintSet(x_lo=[x_lo], x_hi=[x_hi],
                       u_lo=[-0.5, x_lo], u_hi=[0.5, x_hi],
                       v_sets=[(0, 1)], mixed=mixed)
    costs = [stage] * (N - 1) + [final]
    return MiocpInstance(dyn=dyn, stage_costs=costs, terminal_cost=term,
                         constraints=cs, N=N, x0=[float(x0)],
                         name="example1")


def example2(n_x: int = 3, N: int = 20, x0=None) -> MiocpInstance:
    E = np.zeros((n_x, n_x))
    E[np.arange(n_x - 1), np.arange(1, n_x)] = 1.0
    B1 = np.zeros((n_x, 1))
    B1[-1, 0] = 1.0
    B2 = np.ones((n_x, 1))
    dyn = LinearDynamics(A=E, B1=B1, B2=B2)
    cost = StageCost(Q=100.0 * np.eye(n_x), R=np.diag([100.0, 0.0]),
                     r=[10.0, 1.0])
    term = StageCost(Q=np.zeros((n_x, n_x)), R=np.zeros((2, 2)))
    cs = ConstraintSet(x_lo=[-_INF] * n_x, x_hi=[_INF] * n_x,
                       u_lo=[-_INF], u_hi=[_INF], v_sets=[(0, 1)])
    if x0 is None:
        x0 = np.full(n_x, 0.5)
    return MiocpInstance(dyn=dyn, stage_costs=[cost] * N, terminal_cost=term,
                         constraints=cs, N=N,
                         x0=np.asarray(x0, dtype=float).reshape(-1),
                         name="example2")


BUILTINS = {"illustrative": illustrative, "example1": example1,
            "example2": example2}


def builtin_instances() -> dict:
    """Default-parameter copies of every built-in instance."""
    return {name: fn() for name, fn in BUILTINS.items()}


def get_builtin(name: str, **kwargs) -> MiocpInstance:
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin '{name}'; available: {sorted(BUILTINS)}")
    return BUILTINS[name](**kwargs)
