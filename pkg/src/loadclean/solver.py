"""Sequential local optimization over appliance states.

The detector walks the load curve one timeslot at a time.  At each slot it
looks ahead over a short window, finds the switching trajectory that
minimizes the summed |virtual power| needed to explain the observed
aggregates, commits the window's first step, and flags the slot when that
step's virtual power is nonzero beyond tolerance.  Flagged slots freeze the
committed state so corrupted values cannot drag the state estimate along.

Search-order contract (shared with the exact oracle in ``oracle.py``):

* single-step candidates are ranked by (|slack|, Hamming distance from the
  anchor, lexicographic bit vector with appliance 0 most significant);
* partial window paths are pruned once their accumulated objective reaches
  the incumbent, and a zero incumbent stops the search outright;
* any state that is actually evaluated has its aggregate bounds summed in
  appliance-index order, so identical states yield bit-identical slacks
  everywhere in the package.

Branch-and-bound lower bounds use incrementally updated sums plus a small
safety margin, so float drift can only cost a little extra exploration,
never a wrong answer.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .model import (
    AppliancePanel,
    DimensionMismatchError,
    LoadSeries,
    StateVector,
    neighbor_count,
    state_bounds,
    to_power,
)

DEFAULT_ZERO_TOLERANCE_W = 1e-6

# Absolute watts added to branch-and-bound thresholds so accumulated float
# error can never prune a strictly better state.
_BOUND_SAFETY_W = 1e-6

# Ball sizes up to this are fully enumerated and sorted when expanding a
# multi-step window node; larger balls use a dive-then-bounded-siblings
# expansion that only materializes candidates able to beat the incumbent.
_FULL_ENUM_LIMIT = 4096


def minimal_slack(state: StateVector, power_w: float, panel: AppliancePanel) -> float:
    """Signed virtual power (watts) needed for ``state`` to explain ``power_w``.

    Zero when the aggregate interval [L, U] of the state covers the power;
    ``power_w - U`` (positive) above it; ``power_w - L`` (negative) below it.
    This is the unique minimal-|v| value satisfying L + v <= power_w <= U + v.
    """
    lo, hi = state_bounds(state, panel)
    if power_w < lo:
        return power_w - lo
    if power_w > hi:
        return power_w - hi
    return 0.0


def _mask_slack(mask: int, p: float, lo: Sequence[float], hi: Sequence[float]) -> float:
    """minimal_slack on raw mask; canonical appliance-index-order summation."""
    lsum = 0.0
    usum = 0.0
    while mask:
        lsb = mask & -mask
        i = lsb.bit_length() - 1
        lsum += lo[i]
        usum += hi[i]
        mask ^= lsb
    if p < lsum:
        return p - lsum
    if p > usum:
        return p - usum
    return 0.0


def _sphere_masks(anchor: int, m: int, k: int) -> Iterator[int]:
    """Masks at Hamming distance exactly k from anchor, in lexicographic
    order of the resulting bit vector (appliance 0 most significant)."""

    def rec(j: int, left: int, mask: int) -> Iterator[int]:
        if left == 0:
            yield mask
            return
        rem = m - j
        if rem < left:
            return
        if rem == left:
            flip_all = mask
            for t in range(j, m):
                flip_all ^= 1 << t
            yield flip_all
            return
        if (mask >> j) & 1:
            # resulting bit 0 first: flip ON -> OFF before keeping ON
            yield from rec(j + 1, left - 1, mask ^ (1 << j))
            yield from rec(j + 1, left, mask)
        else:
            yield from rec(j + 1, left, mask)
            yield from rec(j + 1, left - 1, mask ^ (1 << j))

    return rec(0, k, anchor)


def enumerate_transitions(anchor: StateVector, delta: int) -> Iterator[StateVector]:
    """Every state within Hamming distance ``delta`` of the anchor, exactly
    once each: the anchor first, then spheres of growing radius, each sphere
    in lexicographic order of the bit vector."""
    if not (0 <= delta <= anchor.m):
        raise ValueError(f"delta must be in [0, {anchor.m}], got {delta}")
    yield anchor
    for k in range(1, delta + 1):
        for mask in _sphere_masks(anchor.mask, anchor.m, k):
            yield StateVector(anchor.m, mask)


class _Ctx:
    """Per-call solver context: panel arrays and the switch budget."""

    __slots__ = ("m", "lo", "hi", "delta")

    def __init__(self, panel: AppliancePanel, delta: int | None = None):
        self.m = panel.m
        self.lo = panel.lower_bounds()
        self.hi = panel.upper_bounds()
        self.delta = panel.switch_budget if delta is None else delta


def _suffix_best_sums(vals: list[float], budget: int) -> list[list[float]]:
    """table[j][b] = sum of the b largest positive vals at positions >= j."""
    m = len(vals)
    table = [[0.0] * (budget + 1) for _ in range(m + 1)]
    top: list[float] = []  # ascending, at most `budget` entries
    for j in range(m - 1, -1, -1):
        v = vals[j]
        if v > 0.0:
            insort(top, v)
            if len(top) > budget:
                top.pop(0)
        row = table[j]
        acc = 0.0
        ln = len(top)
        for b in range(1, budget + 1):
            if b <= ln:
                acc += top[ln - b]
            row[b] = acc
    return table


def _best_transition(anchor: int, p: float, ctx: _Ctx) -> tuple[float, int, int]:
    """Minimum-|slack| state within the anchor's switch ball.

    Returns (signed slack, mask, hamming distance).  Ties resolve to the
    smallest Hamming distance, then lexicographically smallest bit vector;
    the enumeration below visits candidates in exactly that order, so the
    first strict improvement encountered is the canonical winner.
    """
    lo = ctx.lo
    hi = ctx.hi
    m = ctx.m
    delta = ctx.delta

    anchor_lo = 0.0
    anchor_hi = 0.0
    mask = anchor
    while mask:
        lsb = mask & -mask
        i = lsb.bit_length() - 1
        anchor_lo += lo[i]
        anchor_hi += hi[i]
        mask ^= lsb

    if anchor_lo <= p <= anchor_hi:
        return 0.0, anchor, 0
    s0 = (p - anchor_lo) if p < anchor_lo else (p - anchor_hi)
    if delta == 0:
        return s0, anchor, 0

    # Helpful single-flip contributions: turning an ON appliance off lowers
    # L by lo[j]; turning an OFF appliance on raises U by hi[j].
    red_l = [lo[j] if (anchor >> j) & 1 else 0.0 for j in range(m)]
    inc_u = [0.0 if (anchor >> j) & 1 else hi[j] for j in range(m)]
    suf_red = _suffix_best_sums(red_l, delta)
    suf_inc = _suffix_best_sums(inc_u, delta)

    best_slack = s0
    best_val = abs(s0)
    best_mask = anchor
    best_k = 0

    # Greedy warm start: flipping the b most helpful positions gives cheap
    # upper bounds that make the pruning threshold tight from the start.
    # These candidates only tighten the threshold; the incumbent state is
    # always replaced through the canonical enumeration so tie-breaks hold.
    prune_val = best_val
    for contrib in (red_l, inc_u):
        ranked = sorted(
            (j for j in range(m) if contrib[j] > 0.0),
            key=lambda j: contrib[j],
            reverse=True,
        )
        gmask = anchor
        for b, j in enumerate(ranked[:delta], start=1):
            gmask ^= 1 << j
            val = abs(_mask_slack(gmask, p, lo, hi))
            if val < prune_val:
                prune_val = val

    safety = _BOUND_SAFETY_W
    done = False

    def dfs(j: int, left: int, lt: float, ut: float, mask: int, k: int) -> None:
        nonlocal best_slack, best_val, best_mask, best_k, prune_val, done
        if left == 0:
            sl = _mask_slack(mask, p, lo, hi)
            a = -sl if sl < 0.0 else sl
            if a < best_val:
                best_slack = sl
                best_val = a
                best_mask = mask
                best_k = k
                if a < prune_val:
                    prune_val = a
                if sl == 0.0:
                    done = True
            return
        rem = m - j
        if rem < left:
            return
        if rem == left:
            fmask = mask
            flt = lt
            fut = ut
            for t in range(j, m):
                bitval = 1 << t
                if mask & bitval:
                    flt -= lo[t]
                    fut -= hi[t]
                else:
                    flt += lo[t]
                    fut += hi[t]
                fmask ^= bitval
            sl = _mask_slack(fmask, p, lo, hi)
            a = -sl if sl < 0.0 else sl
            if a < best_val:
                best_slack = sl
                best_val = a
                best_mask = fmask
                best_k = k
                if a < prune_val:
                    prune_val = a
                if sl == 0.0:
                    done = True
            return
        bl = (lt - p) - suf_red[j][left]
        bu = (p - ut) - suf_inc[j][left]
        bound = bl if bl > bu else bu
        if bound >= prune_val + safety:
            return
        bitval = 1 << j
        if mask & bitval:
            dfs(j + 1, left - 1, lt - lo[j], ut - hi[j], mask ^ bitval, k)
            if done:
                return
            dfs(j + 1, left, lt, ut, mask, k)
        else:
            dfs(j + 1, left, lt, ut, mask, k)
            if done:
                return
            dfs(j + 1, left - 1, lt + lo[j], ut + hi[j], mask ^ bitval, k)

    for k in range(1, delta + 1):
        dfs(0, k, anchor_lo, anchor_hi, anchor, k)
        if done:
            break

    return best_slack, best_mask, best_k


def _ball_under_cap(
    anchor: int, p: float, ctx: _Ctx, cap: float
) -> list[tuple[float, int, int]]:
    """All (slack, mask, hamming) in the ball with |slack| <= cap + safety,
    in canonical (hamming, lex) order.  ``cap = inf`` enumerates everything."""
    lo = ctx.lo
    hi = ctx.hi
    m = ctx.m
    delta = ctx.delta
    safety = _BOUND_SAFETY_W

    anchor_lo = 0.0
    anchor_hi = 0.0
    mask = anchor
    while mask:
        lsb = mask & -mask
        i = lsb.bit_length() - 1
        anchor_lo += lo[i]
        anchor_hi += hi[i]
        mask ^= lsb

    bounded = cap != float("inf")
    if bounded:
        suf_red = _suffix_best_sums(
            [lo[j] if (anchor >> j) & 1 else 0.0 for j in range(m)], delta
        )
        suf_inc = _suffix_best_sums(
            [0.0 if (anchor >> j) & 1 else hi[j] for j in range(m)], delta
        )

    out: list[tuple[float, int, int]] = []
    s0 = _mask_slack(anchor, p, lo, hi)
    if abs(s0) <= cap + safety:
        out.append((s0, anchor, 0))

    def dfs(j: int, left: int, lt: float, ut: float, mask: int, k: int) -> None:
        if left == 0:
            sl = _mask_slack(mask, p, lo, hi)
            if abs(sl) <= cap + safety:
                out.append((sl, mask, k))
            return
        rem = m - j
        if rem < left:
            return
        if bounded:
            bl = (lt - p) - suf_red[j][left]
            bu = (p - ut) - suf_inc[j][left]
            bound = bl if bl > bu else bu
            if bound > cap + safety:
                return
        bitval = 1 << j
        if mask & bitval:
            dfs(j + 1, left - 1, lt - lo[j], ut - hi[j], mask ^ bitval, k)
            dfs(j + 1, left, lt, ut, mask, k)
        else:
            dfs(j + 1, left, lt, ut, mask, k)
            dfs(j + 1, left - 1, lt + lo[j], ut + hi[j], mask ^ bitval, k)

    for k in range(1, delta + 1):
        dfs(0, k, anchor_lo, anchor_hi, anchor, k)
    return out


class Budget:
    """Counts states committed during tree search; raises when exhausted."""

    __slots__ = ("limit", "spent")

    def __init__(self, limit: int):
        self.limit = limit
        self.spent = 0

    def spend(self) -> None:
        self.spent += 1
        if self.spent > self.limit:
            # Imported lazily to avoid a module cycle; oracle defines the error.
            from .oracle import BudgetExceededError

            raise BudgetExceededError(
                f"search budget exhausted after exploring {self.spent} states "
                f"(limit {self.limit})",
                states_explored=self.spent,
            )


@dataclass
class _PathSearch:
    """Depth-first window search with branch-and-bound over step slacks."""

    ctx: _Ctx
    powers: Sequence[float]
    prune: bool = True
    budget: Budget | None = None
    best_obj: float = field(default=float("inf"), init=False)
    best_masks: tuple[int, ...] | None = field(default=None, init=False)
    best_slacks: tuple[float, ...] | None = field(default=None, init=False)
    _done: bool = field(default=False, init=False)
    _small_ball: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        self._small_ball = neighbor_count(self.ctx.m, self.ctx.delta) <= _FULL_ENUM_LIMIT

    def run(self, anchor: int) -> tuple[float, tuple[int, ...], tuple[float, ...]]:
        self._descend(anchor, 0, 0.0, (), ())
        assert self.best_masks is not None and self.best_slacks is not None
        return self.best_obj, self.best_masks, self.best_slacks

    def _commit(self, obj: float, masks: tuple[int, ...], slacks: tuple[float, ...]) -> None:
        if obj < self.best_obj:
            self.best_obj = obj
            self.best_masks = masks
            self.best_slacks = slacks
            if obj == 0.0:
                self._done = True

    def _descend(
        self,
        anchor: int,
        step: int,
        acc: float,
        masks: tuple[int, ...],
        slacks: tuple[float, ...],
    ) -> None:
        if step == len(self.powers):
            self._commit(acc, masks, slacks)
            return
        p = self.powers[step]
        last = step == len(self.powers) - 1

        if last or self._small_ball:
            # On the last step only the best child can matter, and small
            # balls are cheap to enumerate outright and visit best-first.
            if last and self.prune:
                children = [_best_transition(anchor, p, self.ctx)]
            else:
                children = sorted(
                    _ball_under_cap(anchor, p, self.ctx, float("inf")),
                    key=lambda t: abs(t[0]),
                )
            self._visit_children(children, anchor, step, acc, masks, slacks)
            return

        # Large ball: dive into the best child first to tighten the
        # incumbent, then materialize only siblings able to beat it.
        first = _best_transition(anchor, p, self.ctx)
        self._visit_children([first], anchor, step, acc, masks, slacks)
        if self._done:
            return
        if self.prune:
            cap = self.best_obj - acc
            if cap <= 0.0:
                return
        else:
            cap = float("inf")
        siblings = sorted(
            _ball_under_cap(anchor, p, self.ctx, cap), key=lambda t: abs(t[0])
        )
        rest = [c for c in siblings if c[1] != first[1]]
        self._visit_children(rest, anchor, step, acc, masks, slacks)

    def _visit_children(
        self,
        children: list[tuple[float, int, int]],
        anchor: int,
        step: int,
        acc: float,
        masks: tuple[int, ...],
        slacks: tuple[float, ...],
    ) -> None:
        for sl, mask, _ham in children:
            new_acc = acc + (-sl if sl < 0.0 else sl)
            if self.prune and new_acc >= self.best_obj:
                continue
            if self.budget is not None:
                self.budget.spend()
            self._descend(mask, step + 1, new_acc, masks + (mask,), slacks + (sl,))
            if self._done:
                return


@dataclass(frozen=True)
class WindowSolution:
    """Optimal state trajectory and per-step slacks for one window."""

    states: tuple[StateVector, ...]
    slacks: tuple[float, ...]
    objective: float


def solve_window(
    anchor: StateVector,
    powers: Sequence[float],
    panel: AppliancePanel,
    w: int,
    *,
    enable_pruning: bool = True,
    budget: Budget | None = None,
) -> WindowSolution:
    """Minimize the summed |slack| over a lookahead window of states.

    ``powers`` are watts for the next ``len(powers)`` slots (at most ``w``;
    shorter at the series tail).  Each consecutive pair of states, anchor
    included, differs in at most the panel's switch budget.
    """
    if anchor.m != panel.m:
        raise DimensionMismatchError(f"anchor has m={anchor.m}, panel has m={panel.m}")
    if w < 1:
        raise ValueError(f"window size must be >= 1, got {w}")
    if not (1 <= len(powers) <= w):
        raise ValueError(f"need 1..{w} powers, got {len(powers)}")
    ctx = _Ctx(panel)
    search = _PathSearch(ctx, [float(p) for p in powers], prune=enable_pruning, budget=budget)
    obj, masks, slacks = search.run(anchor.mask)
    states = tuple(StateVector(panel.m, mk) for mk in masks)
    return WindowSolution(states=states, slacks=slacks, objective=obj)


@dataclass(frozen=True)
class SolverConfig:
    """Detector knobs: lookahead, zero tolerance, initial state, pruning."""

    initial_state: StateVector
    window_size: int = 1
    zero_tolerance: float = DEFAULT_ZERO_TOLERANCE_W
    enable_pruning: bool = True

    def __post_init__(self) -> None:
        if self.window_size < 1:
            raise ValueError(f"window_size must be >= 1, got {self.window_size}")
        if not (self.zero_tolerance >= 0):
            raise ValueError(f"zero_tolerance must be >= 0, got {self.zero_tolerance}")


@dataclass(frozen=True)
class DetectionReport:
    """Per-slot virtual power, flagged slots, and the committed state path.

    ``corrupted_indices`` are 1-based timeslots.  For unflagged slots the
    observed power lies within ``estimated_bounds_w`` (up to the zero
    tolerance); flagged slots keep the frozen previous state's bounds.
    """

    virtual_power_w: tuple[float, ...]
    corrupted_indices: tuple[int, ...]
    committed_states: tuple[StateVector, ...]
    estimated_bounds_w: tuple[tuple[float, float], ...]
    zero_tolerance_w: float

    @property
    def n(self) -> int:
        return len(self.virtual_power_w)


def committed_objective(
    series: LoadSeries, panel: AppliancePanel, report: DetectionReport
) -> float:
    """Total |slack| of the committed state trajectory, in watts.

    On flagged slots the reported virtual power belongs to the rejected
    proposal state, not the frozen one, so summing ``virtual_power_w`` does
    not measure the quality of the committed trajectory as a solution.  This
    evaluates the trajectory that was actually kept; by feasibility it can
    never beat an exact global optimizer's objective.
    """
    powers = to_power(series, panel)
    if len(powers) != len(report.committed_states):
        raise DimensionMismatchError(
            f"series has {len(powers)} slots, report committed {len(report.committed_states)}"
        )
    return sum(
        abs(minimal_slack(s, p, panel))
        for s, p in zip(report.committed_states, powers)
    )


def detect(
    series: LoadSeries,
    panel: AppliancePanel,
    config: SolverConfig,
    *,
    progress: Callable[[int, int], None] | None = None,
) -> DetectionReport:
    """Flag corrupted slots by sequential window optimization.

    Slides a ``config.window_size`` lookahead over the series (windows
    truncate at the tail), commits each window's first step, and flags slot
    k when |virtual power| exceeds the zero tolerance, freezing the state.
    """
    if config.initial_state.m != panel.m:
        raise DimensionMismatchError(
            f"initial state has m={config.initial_state.m}, panel has m={panel.m}"
        )
    powers = to_power(series, panel)
    n = len(powers)
    w = config.window_size
    eps = config.zero_tolerance
    ctx = _Ctx(panel)
    lo = ctx.lo
    hi = ctx.hi

    anchor = config.initial_state.mask
    virtual: list[float] = []
    flagged: list[int] = []
    committed_masks: list[int] = []
    bounds: list[tuple[float, float]] = []
    # Frozen anchors over constant corrupted runs repeat the same subproblem;
    # memoizing on (anchor, power) returns the identical solution object.
    memo: dict[tuple[int, float], tuple[float, int, int]] = {}

    for k in range(n):
        window = powers[k : k + w]
        if len(window) == 1:
            key = (anchor, window[0])
            hit = memo.get(key)
            if hit is None:
                hit = _best_transition(anchor, window[0], ctx)
                memo[key] = hit
            sl, mask = hit[0], hit[1]
        else:
            search = _PathSearch(ctx, window, prune=config.enable_pruning)
            _obj, masks, slacks = search.run(anchor)
            sl, mask = slacks[0], masks[0]
        virtual.append(sl)
        if (-sl if sl < 0.0 else sl) > eps:
            flagged.append(k + 1)
            mask = anchor  # freeze: corrupted data must not move the state
        committed_masks.append(mask)
        anchor = mask
        if progress is not None:
            progress(k + 1, n)

    for mask in committed_masks:
        lsum = 0.0
        usum = 0.0
        mk = mask
        while mk:
            lsb = mk & -mk
            i = lsb.bit_length() - 1
            lsum += lo[i]
            usum += hi[i]
            mk ^= lsb
        bounds.append((lsum, usum))

    return DetectionReport(
        virtual_power_w=tuple(virtual),
        corrupted_indices=tuple(flagged),
        committed_states=tuple(StateVector(panel.m, mk) for mk in committed_masks),
        estimated_bounds_w=tuple(bounds),
        zero_tolerance_w=eps,
    )
