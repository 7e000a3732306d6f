"""Turnpike-informed guess generation for the weighted branch and bound.

Guesses encode the expectation that optimal integer controls sit at the
steady-state value for most of the horizon: full guesses place explicit
entry/leave sequences around a steady-state plateau, partial tail guesses
fix only the plateau from some stage onward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bnb import GuessSet
from .relaxation import PartialAssignment


@dataclass(frozen=True)
class GuessTemplate:
    """Entry/leave integer sequences placed around a steady-state plateau."""

    entry_values: tuple = ()
    leave_values: tuple = ()
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "entry_values",
                           tuple(_as_ivec(v) for v in self.entry_values))
        object.__setattr__(self, "leave_values",
                           tuple(_as_ivec(v) for v in self.leave_values))


def _as_ivec(v):
    return tuple(int(round(c)) for c in np.atleast_1d(v))


def plateau_guesses(v_bar, N: int, templates) -> GuessSet:
    """Full guesses [entry, v_bar repeated, leave] per template."""
    v_bar = _as_ivec(v_bar)
    guesses, weights = [], []
    for t in templates:
        pad = N - len(t.entry_values) - len(t.leave_values)
        if pad < 0:
            raise ValueError(
                f"template entry+leave length exceeds horizon {N}")
        entries = t.entry_values + (v_bar,) * pad + t.leave_values
        guesses.append(PartialAssignment(entries=entries))
        weights.append(t.weight)
    return GuessSet(guesses=tuple(guesses), weights=tuple(weights))


def tail_guesses(v_bar, N: int, k_hat_list):
    """Partial guesses fixing v(k) = v_bar for k >= k_hat, relaxed before."""
    v_bar = _as_ivec(v_bar)
    out = []
    for k_hat in k_hat_list:
        if not 0 <= k_hat < N:
            raise ValueError(f"k_hat {k_hat} must lie in [0, N)")
        entries = (None,) * k_hat + (v_bar,) * (N - k_hat)
        out.append(PartialAssignment(entries=entries))
    return out


def dominant_weight(base_weights) -> float:
    """Weight that dominates the default-strategy weights: 4 * max."""
    base_weights = list(base_weights)
    if not base_weights:
        raise ValueError("base weight collection is empty")
    return 4.0 * max(base_weights)


def table1_templates():
    """The hand-picked entry/leave template family used for the piecewise
    dynamics benchmark: short all-ones entry arcs and leave arcs around a
    zero plateau."""
    return [
        GuessTemplate(entry_values=((1,), (1,)), leave_values=(), weight=1),
        GuessTemplate(entry_values=((1,), (1,), (1,)), leave_values=(), weight=2),
        GuessTemplate(entry_values=((1,), (1,), (1,)), leave_values=((1,),), weight=3),
        GuessTemplate(entry_values=((1,), (1,), (1,)), leave_values=((1,), (1,)), weight=4),
        GuessTemplate(entry_values=((1,), (1,), (1,)), leave_values=((1,), (1,), (1,)), weight=3),
        GuessTemplate(entry_values=((1,), (1,), (1,)), leave_values=((1,), (1,), (1,), (1,)), weight=2),
    ]


def guesses_to_json(gs: GuessSet) -> list:
    """Serialize to the instance-file "guesses" schema: a list of
    {"V": [[...] or null per stage], "w": num}."""
    out = []
    for pa, w in zip(gs.guesses, gs.weights):
        out.append({"V": [None if e is None else list(e) for e in pa.entries],
                    "w": w})
    return out


def guesses_from_json(data) -> GuessSet:
    guesses, weights = [], []
    for item in data:
        entries = tuple(None if e is None else tuple(int(c) for c in np.atleast_1d(e))
                        for e in item["V"])
        guesses.append(PartialAssignment(entries=entries))
        weights.append(float(item["w"]))
    return GuessSet(guesses=tuple(guesses), weights=tuple(weights))
