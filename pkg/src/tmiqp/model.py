"""Data model for discrete-time linear-quadratic mixed-integer optimal
control problems: instance containers, validation, simulation, cost
evaluation, and the JSON instance format.

Dynamics are affine, x(k+1) = A x(k) + B1 u(k) + B2 v(k) + c, with box
and mixed polytope constraints per stage and per-channel finite integer
sets for v.  Instances are immutable after construction and all
operations are pure functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_INF = float("inf")


def _mat(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _vec(v, name, allow_inf=False):
    v = np.atleast_1d(np.asarray(v, dtype=float)).reshape(-1)
    if not allow_inf and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    if allow_inf and np.any(np.isnan(v)):
        raise ValueError(f"{name} has NaN entries")
    return v


@dataclass(frozen=True)
class LinearDynamics:
    """x+ = A x + B1 u + B2 v + c."""

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        A = _mat(self.A, "A")
        B1 = _mat(self.B1, "B1")
        B2 = _mat(self.B2, "B2")
        n_x = A.shape[0]
        if A.shape[1] != n_x:
            raise ValueError("A must be square")
        if B1.shape[0] != n_x or B2.shape[0] != n_x:
            raise ValueError("B1/B2 row count must match A")
        c = np.zeros(n_x) if self.c is None else _vec(self.c, "c")
        if c.shape[0] != n_x:
            raise ValueError("c length must match A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B1", B1)
        object.__setattr__(self, "B2", B2)
        object.__setattr__(self, "c", c)

    @property
    def n_x(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B1.shape[1]

    @property
    def n_v(self):
        return self.B2.shape[1]


@dataclass(frozen=True)
class StageCost:
    """Quadratic-plus-linear stage cost on (x, u, v).

    ell(x, u, v) = x'Qx + w'Rw + q'x + r'w + constant, with w = (u, v).
    Q and R are symmetrized on construction.  Indefinite Q, R are legal
    here; positive semidefiniteness of the relaxed blocks is checked at
    QP solve time, not at construction.

    Used as a terminal cost, only Q, q and constant act (on x(N)).
    """

    Q: np.ndarray
    R: np.ndarray
    q: np.ndarray = None
    r: np.ndarray = None
    constant: float = 0.0

    def __post_init__(self):
        Q = _mat(self.Q, "Q")
        R = _mat(self.R, "R")
        if Q.shape[0] != Q.shape[1] or R.shape[0] != R.shape[1]:
            raise ValueError("Q and R must be square")
        Q = 0.5 * (Q + Q.T)
        R = 0.5 * (R + R.T)
        q = np.zeros(Q.shape[0]) if self.q is None else _vec(self.q, "q")
        r = np.zeros(R.shape[0]) if self.r is None else _vec(self.r, "r")
        if q.shape[0] != Q.shape[0] or r.shape[0] != R.shape[0]:
            raise ValueError("q/r lengths must match Q/R")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "constant", float(self.constant))

    def value(self, x, w):
        x = np.asarray(x, dtype=float).reshape(-1)
        w = np.asarray(w, dtype=float).reshape(-1)
        return float(x @ self.Q @ x + w @ self.R @ w
                     + self.q @ x + self.r @ w + self.constant)

    def terminal_value(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.Q @ x + self.q @ x + self.constant)


@dataclass(frozen=True)
class MixedRow:
    """lo <= gx'x + gu'u + gv'v <= hi, enforced at every stage."""

    gx: np.ndarray
    gu: np.ndarray
    gv: np.ndarray
    lo: float = -_INF
    hi: float = _INF

    def __post_init__(self):
        object.__setattr__(self, "gx", _vec(self.gx, "gx"))
        object.__setattr__(self, "gu", _vec(self.gu, "gu"))
        object.__setattr__(self, "gv", _vec(self.gv, "gv"))
        lo, hi = float(self.lo), float(self.hi)
        if np.isnan(lo) or np.isnan(hi):
            raise ValueError("mixed row bounds must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class ConstraintSet:
    """Stage-invariant constraints: boxes on x and u, finite per-channel
    integer sets for v, and mixed polytope rows coupling (x, u, v)."""

    x_lo: np.ndarray
    x_hi: np.ndarray
    u_lo: np.ndarray
    u_hi: np.ndarray
    v_sets: tuple
    mixed: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "x_lo", _vec(self.x_lo, "x_lo", allow_inf=True))
        object.__setattr__(self, "x_hi", _vec(self.x_hi, "x_hi", allow_inf=True))
        object.__setattr__(self, "u_lo", _vec(self.u_lo, "u_lo", allow_inf=True))
        object.__setattr__(self, "u_hi", _vec(self.u_hi, "u_hi", allow_inf=True))
        vs = tuple(tuple(int(v) for v in ch) for ch in self.v_sets)
        object.__setattr__(self, "v_sets", vs)
        object.__setattr__(self, "mixed", tuple(self.mixed))

    @property
    def n_v(self):
        return len(self.v_sets)

    def v_hull(self):
        """Per-channel interval hull [min, max] of the integer sets."""
        lo = np.array([min(ch) for ch in self.v_sets], dtype=float)
        hi = np.array([max(ch) for ch in self.v_sets], dtype=float)
        return lo, hi


@dataclass(frozen=True)
class MiocpInstance:
    dyn: LinearDynamics
    stage_costs: tuple
    terminal_cost: StageCost
    constraints: ConstraintSet
    N: int
    x0: np.ndarray
    x0_lo: np.ndarray = None
    x0_hi: np.ndarray = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stage_costs", tuple(self.stage_costs))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "x0", _vec(self.x0, "x0"))
        if self.x0_lo is not None:
            object.__setattr__(self, "x0_lo", _vec(self.x0_lo, "x0_lo", allow_inf=True))
        if self.x0_hi is not None:
            object.__setattr__(self, "x0_hi", _vec(self.x0_hi, "x0_hi", allow_inf=True))

    @property
    def n_x(self):
        return self.dyn.n_x

    @property
    def n_u(self):
        return self.dyn.n_u

    @property
    def n_v(self):
        return self.dyn.n_v


@dataclass(frozen=True)
class Trajectory:
    """Primal triplet (x, u, v); relaxed (non-integral) v is permitted."""

    x: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_2d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "u", np.atleast_2d(np.asarray(self.u, dtype=float)))
        object.__setattr__(self, "v", np.atleast_2d(np.asarray(self.v, dtype=float)))
        if self.u.shape[0] != self.v.shape[0] or \
                self.x.shape[0] != self.u.shape[0] + 1:
            raise ValueError("trajectory stage counts disagree: x needs one "
                             "more row than u and v")


def validate(inst: MiocpInstance):
    """Return a list of human-readable violations; empty means valid.

    Diagnostics are returned rather than raised so callers can report
    every inconsistency at once.
    """
    out = []
    d = inst.dyn
    cs = inst.constraints
    n_x, n_u, n_v = d.n_x, d.n_u, d.n_v

    if inst.N < 1:
        out.append(f"horizon: N must be >= 1, got {inst.N}")
    if inst.x0.shape[0] != n_x:
        out.append(f"dimension mismatch: x0 has {inst.x0.shape[0]} entries, A is {n_x}x{n_x}")
    if len(inst.stage_costs) != inst.N:
        out.append(f"stage costs: expected {inst.N} entries, got {len(inst.stage_costs)}")
    for k, sc in enumerate(inst.stage_costs):
        if sc.Q.shape[0] != n_x:
            out.append(f"dimension mismatch: stage {k} Q is {sc.Q.shape[0]}x{sc.Q.shape[0]}, need {n_x}")
        if sc.R.shape[0] != n_u + n_v:
            out.append(f"dimension mismatch: stage {k} R is {sc.R.shape[0]}x{sc.R.shape[0]}, need {n_u + n_v}")
    if inst.terminal_cost.Q.shape[0] != n_x:
        out.append("dimension mismatch: terminal cost Q size differs from n_x")

    for name, lo, hi, n in (("x", cs.x_lo, cs.x_hi, n_x), ("u", cs.u_lo, cs.u_hi, n_u)):
        if lo.shape[0] != n or hi.shape[0] != n:
            out.append(f"dimension mismatch: {name} bounds length differs from n_{name}")
        elif np.any(lo > hi):
            out.append(f"bounds: {name}_lo > {name}_hi in some component")
    if len(cs.v_sets) != n_v:
        out.append(f"dimension mismatch: {len(cs.v_sets)} v channels, B2 has {n_v} columns")
    for j, ch in enumerate(cs.v_sets):
        if len(ch) == 0:
            out.append(f"empty integer set: v channel {j}")
        elif any(b <= a for a, b in zip(ch, ch[1:])):
            out.append(f"integer set: v channel {j} not strictly sorted")
    for i, row in enumerate(cs.mixed):
        if row.gx.shape[0] != n_x or row.gu.shape[0] != n_u or row.gv.shape[0] != n_v:
            out.append(f"dimension mismatch: mixed row {i}")
        if row.lo > row.hi:
            out.append(f"bounds: mixed row {i} has lo > hi")

    if inst.x0.shape[0] == n_x and cs.x_lo.shape[0] == n_x:
        if np.any(inst.x0 < cs.x_lo - 1e-9) or np.any(inst.x0 > cs.x_hi + 1e-9):
            out.append("x0 outside the state box X")
    if inst.x0_lo is not None and inst.x0.shape[0] == inst.x0_lo.shape[0]:
        if np.any(inst.x0 < inst.x0_lo - 1e-9) or np.any(inst.x0 > inst.x0_hi + 1e-9):
            out.append("x0 outside the initial-condition set X0")
    return out


def simulate(inst: MiocpInstance, u_seq, v_seq) -> Trajectory:
    """Forward-simulate the affine dynamics; feasibility is not checked."""
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    v_seq = np.atleast_2d(np.asarray(v_seq, dtype=float))
    if u_seq.shape == (1, inst.N) and inst.n_u == 1:
        u_seq = u_seq.T
    if v_seq.shape == (1, inst.N) and inst.n_v == 1:
        v_seq = v_seq.T
    if u_seq.shape != (inst.N, inst.n_u):
        raise ValueError(f"u_seq must be {inst.N}x{inst.n_u}, got {u_seq.shape}")
    if v_seq.shape != (inst.N, inst.n_v):
        raise ValueError(f"v_seq must be {inst.N}x{inst.n_v}, got {v_seq.shape}")
    d = inst.dyn
    x = np.empty((inst.N + 1, inst.n_x))
    x[0] = inst.x0
    for k in range(inst.N):
        x[k + 1] = d.A @ x[k] + d.B1 @ u_seq[k] + d.B2 @ v_seq[k] + d.c
    return Trajectory(x=x, u=u_seq, v=v_seq)


def total_cost(inst: MiocpInstance, traj: Trajectory) -> float:
    """Sum of stage costs plus the terminal cost on x(N)."""
    if traj.x.shape != (inst.N + 1, inst.n_x):
        raise ValueError("trajectory x dimensions do not match instance")
    total = 0.0
    for k in range(inst.N):
        w = np.concatenate([traj.u[k], traj.v[k]])
        total += inst.stage_costs[k].value(traj.x[k], w)
    total += inst.terminal_cost.terminal_value(traj.x[inst.N])
    return total


# ---------------------------------------------------------------------------
# JSON instance format


def _bound_to_json(x):
    return [None if not np.isfinite(b) else float(b) for b in x]


def _bound_from_json(x, sign):
    out = []
    for b in x:
        if b is None or b in ("-inf", "inf", "+inf"):
            out.append(-_INF if sign < 0 else _INF)
        else:
            out.append(float(b))
    return np.asarray(out)


def _cost_to_json(sc: StageCost):
    return {"Q": sc.Q.tolist(), "R": sc.R.tolist(), "q": sc.q.tolist(),
            "r": sc.r.tolist(), "constant": sc.constant}


def _cost_from_json(d, n_x, n_uv):
    return StageCost(
        Q=np.asarray(d.get("Q", np.zeros((n_x, n_x)))),
        R=np.asarray(d.get("R", np.zeros((n_uv, n_uv)))),
        q=np.asarray(d.get("q", np.zeros(n_x))),
        r=np.asarray(d.get("r", np.zeros(n_uv))),
        constant=float(d.get("constant", 0.0)),
    )


def instance_to_dict(inst: MiocpInstance) -> dict:
    cs = inst.constraints
    d = {
        "A": inst.dyn.A.tolist(),
        "B1": inst.dyn.B1.tolist(),
        "B2": inst.dyn.B2.tolist(),
        "N": inst.N,
        "x0": inst.x0.tolist(),
        "stage_costs": [_cost_to_json(sc) for sc in inst.stage_costs],
        "terminal_cost": _cost_to_json(inst.terminal_cost),
        "x_bounds": [_bound_to_json(cs.x_lo), _bound_to_json(cs.x_hi)],
        "u_bounds": [_bound_to_json(cs.u_lo), _bound_to_json(cs.u_hi)],
        "v_sets": [list(ch) for ch in cs.v_sets],
        "mixed": [
            {"gx": r.gx.tolist(), "gu": r.gu.tolist(), "gv": r.gv.tolist(),
             "lo": r.lo if np.isfinite(r.lo) else "-inf",
             "hi": r.hi if np.isfinite(r.hi) else "inf"}
            for r in cs.mixed
        ],
    }
    if np.any(inst.dyn.c != 0.0):
        d["c"] = inst.dyn.c.tolist()
    if inst.x0_lo is not None:
        d["x0_bounds"] = [_bound_to_json(inst.x0_lo), _bound_to_json(inst.x0_hi)]
    if inst.name:
        d["name"] = inst.name
    return d


def instance_from_dict(d: dict) -> MiocpInstance:
    dyn = LinearDynamics(A=np.asarray(d["A"]), B1=np.asarray(d["B1"]),
                         B2=np.asarray(d["B2"]),
                         c=np.asarray(d["c"]) if "c" in d else None)
    n_x, n_u, n_v = dyn.n_x, dyn.n_u, dyn.n_v
    N = int(d["N"])
    if "stage_costs" in d:
        costs = [_cost_from_json(c, n_x, n_u + n_v) for c in d["stage_costs"]]
    else:
        costs = [_cost_from_json(d["stage_cost"], n_x, n_u + n_v)] * N
    term = _cost_from_json(d.get("terminal_cost", {}), n_x, n_u + n_v)
    xb = d.get("x_bounds", [[None] * n_x, [None] * n_x])
    ub = d.get("u_bounds", [[None] * n_u, [None] * n_u])
    cs = ConstraintSet(
        x_lo=_bound_from_json(xb[0], -1), x_hi=_bound_from_json(xb[1], +1),
        u_lo=_bound_from_json(ub[0], -1), u_hi=_bound_from_json(ub[1], +1),
        v_sets=d["v_sets"],
        mixed=tuple(
            MixedRow(gx=np.asarray(r["gx"]), gu=np.asarray(r["gu"]),
                     gv=np.asarray(r["gv"]),
                     lo=-_INF if r.get("lo") in (None, "-inf") else float(r["lo"]),
                     hi=_INF if r.get("hi") in (None, "inf", "+inf") else float(r["hi"]))
            for r in d.get("mixed", [])
        ),
    )
    x0b = d.get("x0_bounds")
    return MiocpInstance(
        dyn=dyn, stage_costs=costs, terminal_cost=term, constraints=cs,
        N=N, x0=np.asarray(d["x0"]),
        x0_lo=None if x0b is None else _bound_from_json(x0b[0], -1),
        x0_hi=None if x0b is None else _bound_from_json(x0b[1], +1),
        name=d.get("name", ""),
    )


def load_instance(path) -> MiocpInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: MiocpInstance, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)


def instances_equal(a: MiocpInstance, b: MiocpInstance, tol=0.0) -> bool:
    """Structural equality of two instances (used by round-trip tests)."""
    da, db = instance_to_dict(a), instance_to_dict(b)
    return json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True) if tol == 0.0 \
        else _dicts_close(da, db, tol)


def _dicts_close(a, b, tol):
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_dicts_close(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_dicts_close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b) <= tol
    return a == b
