"""Monte Carlo generation of appliance panels, load curves, and corruption.

All randomness flows from integer seeds through numpy ``SeedSequence``
spawn keys, one stream per concern, so a single seed reproduces every
artifact and changing one stage never perturbs another:

* ``(0,)`` appliance panel ranges
* ``(1,)`` state walk and per-slot power draws
* ``(2,)`` corruption placement and replacement values
* ``(3,)`` randomized initial states (robustness protocols)
* ``(4,)`` equilibrium starting states (scenario warm starts)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AppliancePanel, ApplianceProfile, LoadSeries, StateVector

_PANEL_KEY = (0,)
_SERIES_KEY = (1,)
_CORRUPTION_KEY = (2,)
_INITIAL_STATE_KEY = (3,)
_EQUILIBRIUM_STATE_KEY = (4,)

DEFAULT_SWITCH_BUDGET = 4


@dataclass(frozen=True)
class GenParams:
    """Synthetic-scenario knobs.

    ``range_ratio`` caps each appliance's range width relative to its lower
    bound; ``switch_rate`` is the Poisson mean of state flips per slot;
    ``samples_per_hour`` is the sampling rate f (e.g. 600 for 6-second
    sampling); ``n_slots`` is the series length.
    """

    m: int
    p_min_w: float
    p_max_w: float
    range_ratio: float
    switch_rate: float
    samples_per_hour: float
    n_slots: int
    seed: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not (0 <= self.p_min_w <= self.p_max_w):
            raise ValueError(
                f"need 0 <= p_min_w <= p_max_w, got [{self.p_min_w}, {self.p_max_w}]"
            )
        if self.range_ratio < 0:
            raise ValueError(f"range_ratio must be >= 0, got {self.range_ratio}")
        if self.switch_rate < 0:
            raise ValueError(f"switch_rate must be >= 0, got {self.switch_rate}")
        if self.samples_per_hour <= 0:
            raise ValueError(f"samples_per_hour must be > 0, got {self.samples_per_hour}")
        if self.n_slots < 0:
            raise ValueError(f"n_slots must be >= 0, got {self.n_slots}")


@dataclass(frozen=True)
class CorruptionParams:
    """Random corruption: Exponential(mean_gap_slots) gaps between corrupted
    slots, replacement values uniform on [0, max_value_wh] watt-hours."""

    mean_gap_slots: float
    max_value_wh: float
    seed: int

    def __post_init__(self) -> None:
        if self.mean_gap_slots <= 0:
            raise ValueError(f"mean_gap_slots must be > 0, got {self.mean_gap_slots}")
        if self.max_value_wh < 0:
            raise ValueError(f"max_value_wh must be >= 0, got {self.max_value_wh}")


@dataclass(frozen=True)
class GroundTruth:
    """Which slots were corrupted (1-based), their original watt-hours, and,
    when known, the true per-slot states."""

    corrupted_indices: tuple[int, ...]
    original_values_wh: tuple[float, ...]
    true_states: tuple[StateVector, ...] | None = None

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.corrupted_indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("corrupted_indices must be strictly increasing")
        if any(i < 1 for i in idx):
            raise ValueError("corrupted_indices are 1-based and must be >= 1")
        object.__setattr__(self, "corrupted_indices", idx)
        vals = tuple(float(v) for v in self.original_values_wh)
        if len(vals) != len(idx):
            raise ValueError(
                f"{len(idx)} corrupted indices but {len(vals)} original values"
            )
        object.__setattr__(self, "original_values_wh", vals)
        if self.true_states is not None:
            object.__setattr__(self, "true_states", tuple(self.true_states))


def gen_panel(params: GenParams, switch_budget: int | None = None) -> AppliancePanel:
    """Draw an appliance panel: lower bounds uniform on [p_min, p_max], each
    upper bound at most ``range_ratio`` of its lower bound above it, clipped
    to p_max.  Appliances are named A1..Am in draw order."""
    rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=_PANEL_KEY))
    lowers = rng.uniform(params.p_min_w, params.p_max_w, params.m)
    extents = rng.uniform(0.0, 1.0, params.m) * (params.range_ratio * lowers)
    uppers = np.minimum(lowers + extents, params.p_max_w)
    # A zero-width cap at p_max is legal; keep upper >= lower regardless.
    uppers = np.maximum(uppers, lowers)
    appliances = tuple(
        ApplianceProfile(name=f"A{i + 1}", lower_w=float(lowers[i]), upper_w=float(uppers[i]))
        for i in range(params.m)
    )
    budget = DEFAULT_SWITCH_BUDGET if switch_budget is None else switch_budget
    return AppliancePanel(
        appliances=appliances,
        sampling_per_hour=params.samples_per_hour,
        switch_budget=min(budget, params.m),
    )


def _simulate_full(
    panel: AppliancePanel, params: GenParams, initial_state: StateVector
) -> tuple[LoadSeries, tuple[StateVector, ...], np.ndarray]:
    """simulate(), also returning the per-slot power draw matrix (n x m)."""
    if initial_state.m != panel.m:
        raise ValueError(
            f"initial state has m={initial_state.m}, panel has m={panel.m}"
        )
    m = panel.m
    f = panel.sampling_per_hour
    rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=_SERIES_KEY))
    lowers = np.asarray(panel.lower_bounds())
    uppers = np.asarray(panel.upper_bounds())

    mask = initial_state.mask
    values: list[float] = []
    states: list[StateVector] = []
    draws = np.zeros((params.n_slots, m))
    for t in range(params.n_slots):
        flips = int(rng.poisson(params.switch_rate))
        while flips > m:  # reject draws beyond the appliance count
            flips = int(rng.poisson(params.switch_rate))
        if flips:
            for i in rng.choice(m, size=flips, replace=False):
                mask ^= 1 << int(i)
        slot = rng.uniform(lowers, uppers)
        draws[t] = slot
        # Aggregate in appliance-index order (the package-wide summation rule).
        agg = 0.0
        mk = mask
        while mk:
            lsb = mk & -mk
            agg += float(slot[lsb.bit_length() - 1])
            mk ^= lsb
        values.append(agg / f)
        states.append(StateVector(m, mask))
    return LoadSeries(tuple(values)), tuple(states), draws


def simulate(
    panel: AppliancePanel, params: GenParams, initial_state: StateVector
) -> tuple[LoadSeries, tuple[StateVector, ...]]:
    """Random-walk the appliance states and meter the aggregate.

    Per slot: a Poisson(switch_rate) number of distinct appliances flip
    (redrawn while above m), each ON appliance draws a power uniform in its
    range, and the slot records the aggregate's watt-hours (sum / f).
    Returns the series and the true state at every slot.
    """
    series, states, _draws = _simulate_full(panel, params, initial_state)
    return series, states


def inject_random(
    series: LoadSeries,
    params: CorruptionParams,
    true_states: tuple[StateVector, ...] | None = None,
) -> tuple[LoadSeries, GroundTruth]:
    """Corrupt isolated slots at Exponential-gap positions.

    Gaps are drawn i.i.d. Exponential(mean_gap_slots) and each is rounded up
    to a whole slot (>= 1), so cumulative positions are strictly increasing;
    corrupted slots are replaced by uniform [0, max_value_wh] watt-hours.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(params.seed, spawn_key=_CORRUPTION_KEY)
    )
    n = series.n
    positions: list[int] = []
    t = 0
    while True:
        gap = max(1, math.ceil(float(rng.exponential(params.mean_gap_slots))))
        t += gap
        if t > n:
            break
        positions.append(t)
    originals = tuple(series.values[i - 1] for i in positions)
    replacements = rng.uniform(0.0, params.max_value_wh, len(positions))
    values = list(series.values)
    for i, v in zip(positions, replacements):
        values[i - 1] = float(v)
    truth = GroundTruth(
        corrupted_indices=tuple(positions),
        original_values_wh=originals,
        true_states=true_states,
    )
    return LoadSeries(tuple(values)), truth


def inject_consecutive(
    series: LoadSeries,
    start: int,
    length: int,
    value_wh: float = 0.0,
    true_states: tuple[StateVector, ...] | None = None,
) -> tuple[LoadSeries, GroundTruth]:
    """Overwrite slots [start, start+length) (1-based) with a constant value,
    zero by default: the meter-outage pattern.  A zero length is a no-op."""
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    if length == 0:
        return series, GroundTruth((), (), true_states=true_states)
    if not (1 <= start and start + length - 1 <= series.n):
        raise ValueError(
            f"slots [{start}, {start + length}) fall outside the series (n={series.n})"
        )
    indices = tuple(range(start, start + length))
    originals = tuple(series.values[i - 1] for i in indices)
    values = list(series.values)
    for i in indices:
        values[i - 1] = float(value_wh)
    truth = GroundTruth(
        corrupted_indices=indices,
        original_values_wh=originals,
        true_states=true_states,
    )
    return LoadSeries(tuple(values)), truth


def random_initial_state(m: int, seed: int) -> StateVector:
    """Uniform random initial state on its own stream (robustness protocols)."""
    rng = np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=_INITIAL_STATE_KEY)
    )
    bits = rng.integers(0, 2, size=m)
    return StateVector.from_bits(int(b) for b in bits)


def equilibrium_initial_state(m: int, seed: int) -> StateVector:
    """Uniform random starting state for the generator itself.

    The per-slot switching walk is mean-reverting around half the appliances
    being on; starting there skips the cold-start ramp during which the load
    level outruns any delta-limited tracker.  Drawn on a stream independent
    of random_initial_state so a scenario can mis-seed the detector while the
    generator keeps its own start.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=_EQUILIBRIUM_STATE_KEY)
    )
    bits = rng.integers(0, 2, size=m)
    return StateVector.from_bits(int(b) for b in bits)
