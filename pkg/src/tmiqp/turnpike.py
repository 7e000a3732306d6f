"""Steady-state optimization and turnpike measurement.

The stationary problem is solved exactly by enumerating every integer
combination and solving the continuous steady-state QP per combination.
Turnpike behavior of a finite-horizon trajectory is measured through the
index set of stages whose (x, u, v) triplet lies within an eps-ball
(infinity norm) of the steady state; the infinity norm makes the
integer-exactness argument (gap < 1 implies equality) componentwise.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import bnb
from .model import MiocpInstance, Trajectory
from .relaxation import OPTIMAL, QPData, solve_qp

_INF = float("inf")

ENUMERATION_LIMIT = 10 ** 6
TIE_TOL = 1e-9


class SteadyStateInfeasible(RuntimeError):
    """No integer combination admits a feasible steady state."""


@dataclass(frozen=True)
class SteadyState:
    x_bar: np.ndarray
    u_bar: np.ndarray
    v_bar: np.ndarray  # integer-valued
    cost: float

    def stacked(self):
        return np.concatenate([self.x_bar, self.u_bar, self.v_bar])


@dataclass
class TurnpikeReport:
    z_bar: SteadyState
    cells: list = field(default_factory=list)
    C_fit: float = 0.0


def _steady_qp(inst: MiocpInstance, v_bar) -> QPData:
    """Continuous steady-state QP in (x, u) for a fixed integer v."""
    d, cs = inst.dyn, inst.constraints
    n_x, n_u, n_v = inst.n_x, inst.n_u, inst.n_v
    sc = inst.stage_costs[0]
    v = np.asarray(v_bar, dtype=float)

    n_var = n_x + n_u
    H = np.zeros((n_var, n_var))
    h = np.zeros(n_var)
    Ruu = sc.R[:n_u, :n_u]
    Ruv = sc.R[:n_u, n_u:]
    Rvv = sc.R[n_u:, n_u:]
    H[:n_x, :n_x] = 2.0 * sc.Q
    H[n_x:, n_x:] = 2.0 * Ruu
    h[:n_x] = sc.q
    h[n_x:] = sc.r[:n_u] + 2.0 * Ruv @ v
    const = float(v @ Rvv @ v + sc.r[n_u:] @ v + sc.constant)

    # (I - A) x - B1 u = B2 v + c
    A_eq = np.hstack([np.eye(n_x) - d.A, -d.B1])
    b_eq = d.B2 @ v + d.c

    rows, rhs = [], []
    trivially_infeasible = False

    def add(coeffs, ub):
        nonlocal trivially_infeasible
        if not any(val != 0.0 for val in coeffs):
            if ub < -TIE_TOL:
                trivially_infeasible = True
            return
        rows.append(coeffs)
        rhs.append(ub)

    for i in range(n_x):
        if cs.x_lo[i] > cs.x_hi[i]:
            trivially_infeasible = True
        if np.isfinite(cs.x_hi[i]):
            add([1.0 if j == i else 0.0 for j in range(n_var)], cs.x_hi[i])
        if np.isfinite(cs.x_lo[i]):
            add([-1.0 if j == i else 0.0 for j in range(n_var)], -cs.x_lo[i])
    for i in range(n_u):
        if cs.u_lo[i] > cs.u_hi[i]:
            trivially_infeasible = True
        if np.isfinite(cs.u_hi[i]):
            add([1.0 if j == n_x + i else 0.0 for j in range(n_var)], cs.u_hi[i])
        if np.isfinite(cs.u_lo[i]):
            add([-1.0 if j == n_x + i else 0.0 for j in range(n_var)], -cs.u_lo[i])
    for row in cs.mixed:
        coeffs = list(row.gx) + list(row.gu)
        shift = float(row.gv @ v)
        if np.isfinite(row.hi):
            add(list(coeffs), row.hi - shift)
        if np.isfinite(row.lo):
            add([-c for c in coeffs], -(row.lo - shift))

    G = sp.csr_matrix(np.asarray(rows).reshape(len(rhs), n_var)) if rhs \
        else sp.csr_matrix((0, n_var))
    return QPData(H=sp.csr_matrix(H), h=h, const=const,
                  A_eq=sp.csr_matrix(A_eq), b_eq=b_eq,
                  G=G, g=np.asarray(rhs, dtype=float), n_var=n_var,
                  trivially_infeasible=trivially_infeasible)


def solve_steady_state(inst: MiocpInstance) -> SteadyState:
    """Global solve of the stationary problem by integer enumeration.

    Every combination of the per-channel integer sets is enumerated in
    lexicographic order and the convex steady-state QP in (x, u) solved;
    ties go to the lexicographically smallest integer vector.  The stage
    cost of stage 0 defines the stationary objective.
    """
    v_sets = inst.constraints.v_sets
    count = 1
    for ch in v_sets:
        count *= len(ch)
    if count > ENUMERATION_LIMIT:
        raise ValueError(f"integer product cardinality {count} exceeds "
                         f"{ENUMERATION_LIMIT}")
    best = None
    for combo in itertools.product(*v_sets):
        qp = _steady_qp(inst, combo)
        sol = solve_qp(qp)
        if sol.status != OPTIMAL:
            continue
        if best is None or sol.objective < best.cost - TIE_TOL:
            z = sol.z
            best = SteadyState(x_bar=z[:inst.n_x].copy(),
                               u_bar=z[inst.n_x:].copy(),
                               v_bar=np.asarray(combo, dtype=float),
                               cost=sol.objective)
    if best is None:
        raise SteadyStateInfeasible("no feasible steady state")
    return best


def deviation(traj: Trajectory, z_bar: SteadyState, k: int) -> float:
    """Infinity-norm deviation of the stage-k triplet from the steady state."""
    d = np.concatenate([traj.x[k] - z_bar.x_bar,
                        traj.u[k] - z_bar.u_bar,
                        traj.v[k] - z_bar.v_bar])
    return float(np.abs(d).max())


def compute_Q_eps(traj: Trajectory, z_bar: SteadyState, eps: float):
    """Indices k in 0..N-1 whose triplet lies within eps of the steady state."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    N = traj.u.shape[0]
    return sorted(k for k in range(N) if deviation(traj, z_bar, k) <= eps)


def _max_run(indices):
    """(first, last) of the longest run of consecutive indices; (-1, -1)
    when empty."""
    if not indices:
        return -1, -1
    best = (indices[0], indices[0])
    start = prev = indices[0]
    for k in indices[1:]:
        if k == prev + 1:
            prev = k
        else:
            if prev - start > best[1] - best[0]:
                best = (start, prev)
            start = prev = k
    if prev - start > best[1] - best[0]:
        best = (start, prev)
    return best


def check_integer_turnpike(traj: Trajectory, z_bar: SteadyState,
                           eps: float) -> bool:
    """True iff v(k) equals the steady-state integer decision exactly for
    every k in Q_eps.  Requires eps in (0, 1): within such a ball an
    integer deviation below 1 forces equality."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if np.abs(traj.v - np.round(traj.v)).max() > 1e-6:
        raise ValueError("trajectory integer entries are not integral")
    v_bar = np.round(z_bar.v_bar).astype(int)
    for k in compute_Q_eps(traj, z_bar, eps):
        if np.any(np.round(traj.v[k]).astype(int) != v_bar):
            return False
    return True


def _with_initial_state(inst: MiocpInstance, x0, N) -> MiocpInstance:
    from dataclasses import replace
    return replace(inst, x0=np.asarray(x0, dtype=float).reshape(-1), N=int(N),
                   stage_costs=_resize_costs(inst, N))


def _resize_costs(inst: MiocpInstance, N):
    """Keep per-stage structure when the horizon changes: the final stage
    cost stays final, earlier stages repeat the generic stage cost."""
    old = inst.stage_costs
    if all(sc is old[0] for sc in old):
        return (old[0],) * N
    return (old[0],) * (N - 1) + (old[-1],)


def turnpike_profile(inst: MiocpInstance, x0_list, N_list, eps_grid,
                     guesses=None, cfg=None, keep_traj=False) -> TurnpikeReport:
    """Solve the MIOCP per (x0, N) cell and tabulate Q_eps statistics.

    C_fit is the smallest constant making the turnpike cardinality bound
    hold on the observed data with the quadratic margin alpha(eps) =
    eps^2, i.e. the max over cells of out_count * eps^2.  Solver failures
    are recorded per cell and do not abort the sweep.
    """
    z_bar = solve_steady_state(inst)
    report = TurnpikeReport(z_bar=z_bar)
    c_fit = 0.0
    for i, x0 in enumerate(x0_list):
        for N in N_list:
            sub = _with_initial_state(inst, x0, N)
            try:
                res = bnb.solve_bnb(sub, guesses=guesses, cfg=cfg)
            except Exception as exc:  # recorded, not raised
                report.cells.append({"x0_id": i, "N": N, "eps": None,
                                     "status": f"error: {exc}"})
                continue
            if res.status != "optimal":
                report.cells.append({"x0_id": i, "N": N, "eps": None,
                                     "status": res.status})
                continue
            for eps in eps_grid:
                q = compute_Q_eps(res.traj, z_bar, eps)
                out = N - len(q)
                first, last = _max_run(q)
                cell = {
                    "x0_id": i, "N": N, "eps": eps, "out_count": out,
                    "entry_end": first, "leave_start": last,
                    "status": "optimal", "J": res.J,
                }
                if keep_traj:
                    cell["traj"] = res.traj
                report.cells.append(cell)
                c_fit = max(c_fit, out * eps ** 2)
    report.C_fit = c_fit
    return report


def write_report(report: TurnpikeReport, csv_path, json_path):
    """CSV of cells plus a JSON header with the steady state and C_fit."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0_id", "N", "eps", "out_count",
                         "entry_end", "leave_start", "status"])
        for c in report.cells:
            writer.writerow([c.get("x0_id"), c.get("N"), c.get("eps"),
                             c.get("out_count", ""), c.get("entry_end", ""),
                             c.get("leave_start", ""), c.get("status")])
    header = {
        "x_bar": report.z_bar.x_bar.tolist(),
        "u_bar": report.z_bar.u_bar.tolist(),
        "v_bar": report.z_bar.v_bar.tolist(),
        "steady_cost": report.z_bar.cost,
        "C_fit": report.C_fit,
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh, indent=2)
