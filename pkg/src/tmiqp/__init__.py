"""Turnpike-aware branch-and-bound toolkit for linear-quadratic
mixed-integer optimal control."""

from .bnb import BnbConfig, BnbResult, GuessSet, Node, solve_bnb
from .dissipativity import DissipativityCertificate, certify, verify
from .guessgen import (GuessTemplate, dominant_weight, plateau_guesses,
                       tail_guesses)
from .instances import builtin_instances, example1, example2, get_builtin, illustrative
from .model import (ConstraintSet, LinearDynamics, MiocpInstance, MixedRow,
                    StageCost, Trajectory, load_instance, save_instance,
                    simulate, total_cost, validate)
from .numerics import (SteinSolution, min_eigenvalue_symmetric, solve_stein,
                       solve_symmetric_indefinite)
from .oracle import enumerate_solve
from .relaxation import (PartialAssignment, RelaxedSolution,
                         build_relaxation, is_integer_feasible, solve_qp)
from .turnpike import (SteadyState, TurnpikeReport, check_integer_turnpike,
                       compute_Q_eps, solve_steady_state, turnpike_profile)

__version__ = "0.1.0"
