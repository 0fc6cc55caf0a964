"""Exact global optimizer over complete state trajectories.

Brute-force ground truth for validating the sequential detector on small
instances: it explores the complete M-ary tree of depth n rooted at the
initial state (M = ball size for the panel's switch budget, edge cost =
|minimal slack|), sharing the sequential solver's child ordering, pruning
rule, and tie-breaks so trajectories are comparable, not just objectives.

Guard rails keep it honest about exponential cost: hard caps on series
length and appliance count, plus an explored-state budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    AppliancePanel,
    DimensionMismatchError,
    LoadSeries,
    StateVector,
    neighbor_count,
    to_power,
)
from .solver import Budget, _Ctx, _PathSearch


class BudgetExceededError(RuntimeError):
    """A size cap or the explored-state budget was hit before completion."""

    def __init__(self, message: str, states_explored: int | None = None):
        super().__init__(message)
        self.states_explored = states_explored


@dataclass(frozen=True)
class OracleLimits:
    """Hard caps making exhaustive search refuse oversized instances."""

    max_n: int = 8
    max_m: int = 6
    max_states_explored: int = 2_000_000

    def __post_init__(self) -> None:
        if self.max_n < 1 or self.max_m < 1 or self.max_states_explored < 1:
            raise ValueError("oracle limits must all be >= 1")


@dataclass(frozen=True)
class GlobalSolution:
    """Globally optimal trajectory: per-slot states, slacks, summed |slack|."""

    states: tuple[StateVector, ...]
    slacks: tuple[float, ...]
    objective: float
    states_explored: int


def solve_global(
    series: LoadSeries,
    panel: AppliancePanel,
    initial_state: StateVector,
    limits: OracleLimits | None = None,
    *,
    enable_pruning: bool = True,
) -> GlobalSolution:
    """Minimize total |virtual power| over all feasible state trajectories.

    Raises BudgetExceededError when the instance exceeds the limits' caps or
    the exploration budget; the error reports the states explored so far.
    """
    if limits is None:
        limits = OracleLimits()
    if initial_state.m != panel.m:
        raise DimensionMismatchError(
            f"initial state has m={initial_state.m}, panel has m={panel.m}"
        )
    if series.n > limits.max_n:
        raise BudgetExceededError(
            f"series length {series.n} exceeds the oracle cap max_n={limits.max_n}"
        )
    if panel.m > limits.max_m:
        raise BudgetExceededError(
            f"appliance count {panel.m} exceeds the oracle cap max_m={limits.max_m}"
        )
    budget = Budget(limits.max_states_explored)
    search = _PathSearch(
        _Ctx(panel), to_power(series, panel), prune=enable_pruning, budget=budget
    )
    objective, masks, slacks = search.run(initial_state.mask)
    return GlobalSolution(
        states=tuple(StateVector(panel.m, mk) for mk in masks),
        slacks=slacks,
        objective=objective,
        states_explored=budget.spent,
    )


def count_tree_paths(m: int, delta: int, n: int) -> int:
    """Number of length-n trajectories the unpruned tree contains: M^n with
    M the switch-ball size.  Exact integers; cannot overflow in Python."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return neighbor_count(m, delta) ** n
