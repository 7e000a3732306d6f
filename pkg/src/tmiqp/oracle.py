"""Brute-force global solver: full enumeration of integer sequences.

Ground-truth generator for tests and suboptimality reporting.  No
pruning of any kind, by design; it must stay independent of the
branch-and-bound path it is used to check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import MiocpInstance, Trajectory
from .relaxation import (INFEASIBLE, OPTIMAL, PartialAssignment,
                         build_relaxation, solve_qp)

DEFAULT_LIMIT = 4096
TIE_TOL = 1e-9


class EnumerationLimitExceeded(ValueError):
    pass


class EnumerationInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class EnumerationResult:
    J: float
    traj: Trajectory
    v_seq: tuple
    sequences_solved: int


def enumerate_solve(inst: MiocpInstance, limit: int = DEFAULT_LIMIT
                    ) -> EnumerationResult:
    """Solve the relaxation for every full integer assignment and return
    the feasible minimum; ties break to the lexicographically smallest
    v-sequence (the enumeration order)."""
    stage_alphabet = list(itertools.product(*inst.constraints.v_sets))
    total = len(stage_alphabet) ** inst.N
    if total > limit:
        raise EnumerationLimitExceeded(
            f"{total} integer sequences exceed the limit {limit}")

    best = None
    solved = 0
    for seq in itertools.product(stage_alphabet, repeat=inst.N):
        pa = PartialAssignment(entries=seq)
        sol = solve_qp(build_relaxation(inst, pa))
        solved += 1
        if sol.status == INFEASIBLE:
            continue
        if sol.status != OPTIMAL:
            raise RuntimeError(f"enumeration subproblem ended {sol.status}")
        if best is None or sol.objective < best.J - TIE_TOL:
            best = EnumerationResult(J=sol.objective, traj=sol.traj,
                                     v_seq=seq, sequences_solved=0)
    if best is None:
        raise EnumerationInfeasible("every integer sequence is infeasible")
    return EnumerationResult(J=best.J, traj=best.traj, v_seq=best.v_seq,
                             sequences_solved=solved)
