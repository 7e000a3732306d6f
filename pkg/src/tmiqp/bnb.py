"""Branch and bound over the stage-ordered integer decision tree, with
guess-based node weighting.

Nodes fix the integer decision of a front-contiguous stage prefix; the
remaining stages are relaxed.  Node selection maximizes an effective
weight combining the search-strategy base weight with similarity scores
against user-supplied full or partial guesses, so that good guesses steer
exploration without ever changing the returned optimum.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .model import MiocpInstance, Trajectory, simulate, total_cost
from .relaxation import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL,
                         PartialAssignment, RelaxedSolution,
                         build_relaxation, is_integer_feasible,
                         round_to_channels, solve_qp)

_INF = float("inf")

DEPTH_FIRST = "depth_first"
BREADTH_FIRST = "breadth_first"
HYBRID = "hybrid"

# Equal-cost subtrees are fathomed rather than re-expanded.
PRUNE_SLACK = 1e-9


class SubproblemError(RuntimeError):
    """A node relaxation could not be solved to the required accuracy."""


@dataclass
class Node:
    id: int
    parent: int | None
    pa: PartialAssignment
    depth: int
    base_weight: float = 0.0
    parent_objective: float = _INF
    guess_bonus: float = 0.0
    insert_seq: int = 0


@dataclass(frozen=True)
class GuessSet:
    guesses: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "guesses", tuple(self.guesses))
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if len(self.guesses) != len(w):
            raise ValueError("guesses and weights must have equal lengths")
        if any(not np.isfinite(x) or x < 0 for x in w):
            raise ValueError("weights must be finite and >= 0")

    @classmethod
    def empty(cls):
        return cls(guesses=(), weights=())

    def __len__(self):
        return len(self.guesses)


@dataclass
class BnbConfig:
    eps_tol: float = 1e-6
    default_strategy: str = HYBRID
    node_limit: int | None = None
    time_limit: float | None = None
    qp_tol: float = 1e-8
    trace_path: str | None = None

    def __post_init__(self):
        if self.eps_tol <= 0:
            raise ValueError("eps_tol must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node_limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class BnbState:
    U: float = _INF
    L: float = -_INF
    S: list = field(default_factory=list)
    T: dict = field(default_factory=dict)  # node id -> solved objective
    incumbent_traj: Trajectory | None = None
    stats: dict = field(default_factory=lambda: {
        "nodes_solved": 0, "qp_iterations": 0, "wall_time": 0.0})


@dataclass
class BnbResult:
    status: str  # "optimal" | "suboptimal" | "infeasible"
    J: float
    traj: Trajectory | None
    stats: dict
    gap: float
    trace: list


def guess_match_score(guess: PartialAssignment, node_pa: PartialAssignment) -> int:
    """Number of integer components where guess and node are both fixed
    and equal.

    This equals D_V(guess) minus a component-count distance in which a
    guess-fixed component facing a relaxed node stage counts as a
    mismatch.
    """
    if len(guess) != len(node_pa):
        raise ValueError("guess and node assignments must have equal lengths")
    score = 0
    for ge, ne in zip(guess.entries, node_pa.entries):
        if ge is None or ne is None:
            continue
        score += sum(1 for a, b in zip(ge, ne) if a == b)
    return score


def effective_weight(node: Node, guesses: GuessSet) -> float:
    """Base weight plus the weighted guess-similarity bonus."""
    bonus = sum(w * guess_match_score(gu, node.pa)
                for gu, w in zip(guesses.guesses, guesses.weights))
    return node.base_weight + bonus


def select_node(S: list, guesses: GuessSet) -> Node:
    """Remove and return the candidate maximizing the effective weight.

    Ties break toward larger depth, then the most recently inserted node,
    which keeps the search deterministic.
    """
    if not S:
        raise ValueError("candidate set is empty")
    best = max(range(len(S)),
               key=lambda i: (S[i].base_weight + S[i].guess_bonus,
                              S[i].depth, S[i].insert_seq))
    return S.pop(best)


def expand_node(node: Node, inst: MiocpInstance) -> list:
    """One child per element of the Cartesian product of the channel sets
    at stage k = node.depth; weights and ids are assigned by the caller."""
    if node.depth >= inst.N:
        raise ValueError("cannot expand a leaf node")
    k = node.depth
    children = []
    for combo in itertools.product(*inst.constraints.v_sets):
        children.append(Node(id=-1, parent=node.id,
                             pa=node.pa.fix(k, combo), depth=k + 1))
    return children


def update_lower_bound(state: BnbState) -> float:
    """L = min over parents of the candidate set of their objectives,
    capped at U: the optimum is min(U, best open subtree bound), so once
    every open bound exceeds the incumbent the gap is closed.  L = U
    when the tree is exhausted."""
    if not state.S:
        state.L = state.U
        return state.L
    vals = []
    for node in state.S:
        if node.parent is None:
            vals.append(-_INF)
        else:
            vals.append(state.T[node.parent])
    state.L = min(state.U, min(vals))
    return state.L


def solve_bnb(inst: MiocpInstance, guesses: GuessSet | None = None,
              cfg: BnbConfig | None = None) -> BnbResult:
    """Weighted branch and bound on the stage-ordered decision tree.

    Loop per iteration: refresh effective weights (cached at insertion,
    since a node's weight never changes), select the argmax node, solve
    its relaxation, then either prune (infeasible or bound >= incumbent),
    record a new incumbent (integer-feasible relaxations are fathomed),
    or expand its children; finally update L and test U - L <= eps_tol.
    """
    guesses = guesses or GuessSet.empty()
    cfg = cfg or BnbConfig()
    for gu in guesses.guesses:
        if len(gu) != inst.N:
            raise ValueError("guess length must equal the horizon")

    t0 = time.perf_counter()
    state = BnbState()
    trace = []
    trace_fh = open(cfg.trace_path, "w") if cfg.trace_path else None

    strategy = cfg.default_strategy
    dive_phase = strategy == HYBRID  # depth-first until the first incumbent

    def base_weight(depth, parent_obj):
        if strategy == DEPTH_FIRST or (strategy == HYBRID and dive_phase):
            return float(depth)
        if strategy == BREADTH_FIRST:
            return float(inst.N - depth)
        # hybrid, bound-improvement phase: best-bound on the parent objective
        return -parent_obj

    next_id = 0
    seq = 0

    def make_node(pa, parent, depth, parent_obj):
        nonlocal next_id, seq
        node = Node(id=next_id, parent=parent, pa=pa, depth=depth,
                    parent_objective=parent_obj, insert_seq=seq)
        node.base_weight = base_weight(depth, parent_obj)
        node.guess_bonus = sum(
            w * guess_match_score(gu, pa)
            for gu, w in zip(guesses.guesses, guesses.weights))
        next_id += 1
        seq += 1
        return node

    root = make_node(PartialAssignment.all_relaxed(inst.N), None, 0, _INF)
    state.S.append(root)

    status = "optimal"
    limit_hit = False
    while state.S:
        node = select_node(state.S, guesses)
        qp = build_relaxation(inst, node.pa)
        sol = solve_qp(qp, tol=cfg.qp_tol)
        if sol.status == ITERATION_LIMIT:
            # accept a slightly loose solve rather than losing soundness
            if sol.kkt_residual <= 1e-6:
                sol = RelaxedSolution(status=OPTIMAL, objective=sol.objective,
                                      traj=sol.traj,
                                      kkt_residual=sol.kkt_residual,
                                      iterations=sol.iterations, z=sol.z)
            else:
                raise SubproblemError(
                    f"node {node.id}: relaxation stopped at KKT residual "
                    f"{sol.kkt_residual:.2e}")
        state.stats["nodes_solved"] += 1
        state.stats["qp_iterations"] += sol.iterations
        state.T[node.id] = sol.objective if sol.status == OPTIMAL else _INF

        action = "pruned"
        if sol.status == INFEASIBLE:
            action = "infeasible"
        elif sol.objective >= state.U - PRUNE_SLACK:
            action = "pruned"
        elif is_integer_feasible(sol, inst):
            action = "incumbent"
            state.U = sol.objective
            state.incumbent_traj = round_to_channels(sol.traj, inst)
            if dive_phase:
                # switch to the bound-improvement phase and re-weight S
                dive_phase = False
                for cand in state.S:
                    cand.base_weight = base_weight(cand.depth,
                                                   cand.parent_objective)
        else:
            action = "expanded"
            for child in expand_node(node, inst):
                state.S.append(make_node(child.pa, node.id, child.depth,
                                         sol.objective))

        update_lower_bound(state)
        rec = {"node": node.id, "parent": node.parent, "depth": node.depth,
               "weight": node.base_weight + node.guess_bonus,
               "status": sol.status, "J": sol.objective, "action": action,
               "U": state.U, "L": state.L,
               "t": time.perf_counter() - t0}
        trace.append(rec)
        if trace_fh:
            trace_fh.write(json.dumps(rec) + "\n")

        if state.U - state.L <= cfg.eps_tol:
            break
        if cfg.node_limit is not None and \
                state.stats["nodes_solved"] >= cfg.node_limit:
            limit_hit = True
            break
        if cfg.time_limit is not None and \
                time.perf_counter() - t0 >= cfg.time_limit:
            limit_hit = True
            break

    if trace_fh:
        trace_fh.close()
    state.stats["wall_time"] = time.perf_counter() - t0

    if limit_hit:
        status = "suboptimal"
    elif state.incumbent_traj is None:
        status = "infeasible"
    if state.U == _INF and state.L == _INF:
        gap = 0.0  # tree exhausted with no feasible point
    else:
        gap = max(0.0, state.U - state.L)
    return BnbResult(status=status, J=state.U, traj=state.incumbent_traj,
                     stats=dict(state.stats), gap=gap, trace=trace)
