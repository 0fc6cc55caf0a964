"""Core domain model for appliance-level load-curve analysis.

Units are explicit throughout: appliance bounds and virtual power are watts,
load series values are watt-hours per timeslot, and ``sampling_per_hour`` is
the number of samples per hour (so one slot spans ``1/sampling_per_hour``
hours).  All solver arithmetic happens on watts; watt-hours appear only at
I/O boundaries.

Timeslot indices in the domain model are 1-based (``1..n``); the series CSV
file format is the one place a 0-based index appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator


class DimensionMismatchError(ValueError):
    """Two artifacts disagree on appliance count or series length."""


class DegenerateUnionError(ValueError):
    """All appliance ranges are zero-width, so the overlap index is undefined."""


def _require_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ApplianceProfile:
    """One appliance's nameplate power range in watts."""

    name: str
    lower_w: float
    upper_w: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower_w", _require_finite(self.lower_w, "lower_w"))
        object.__setattr__(self, "upper_w", _require_finite(self.upper_w, "upper_w"))
        if self.lower_w < 0:
            raise ValueError(f"appliance {self.name!r}: lower_w must be >= 0")
        if self.upper_w < self.lower_w:
            raise ValueError(
                f"appliance {self.name!r}: upper_w {self.upper_w} < lower_w {self.lower_w}"
            )

    @property
    def width_w(self) -> float:
        return self.upper_w - self.lower_w


@dataclass(frozen=True)
class AppliancePanel:
    """The appliance population behind one metered load curve.

    ``switch_budget`` is the maximum number of appliances that may change
    state between consecutive timeslots; ``sampling_per_hour`` converts
    between per-slot watt-hours and watts.
    """

    appliances: tuple[ApplianceProfile, ...]
    sampling_per_hour: float
    switch_budget: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "appliances", tuple(self.appliances))
        if len(self.appliances) < 1:
            raise ValueError("panel needs at least one appliance")
        f = _require_finite(self.sampling_per_hour, "sampling_per_hour")
        if f <= 0:
            raise ValueError(f"sampling_per_hour must be > 0, got {f}")
        object.__setattr__(self, "sampling_per_hour", f)
        if not (0 <= self.switch_budget <= len(self.appliances)):
            raise ValueError(
                f"switch_budget must be in [0, {len(self.appliances)}], got {self.switch_budget}"
            )

    @property
    def m(self) -> int:
        return len(self.appliances)

    def lower_bounds(self) -> list[float]:
        return [a.lower_w for a in self.appliances]

    def upper_bounds(self) -> list[float]:
        return [a.upper_w for a in self.appliances]


@dataclass(frozen=True)
class LoadSeries:
    """A metered load curve: watt-hours per timeslot, slot 1 first."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        for i, v in enumerate(vals):
            if not math.isfinite(v):
                raise ValueError(f"series value at slot {i + 1} is not finite: {v!r}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StateVector:
    """On/off assignment for all m appliances, stored as a bit mask.

    Bit i of ``mask`` is appliance i (the i-th appliance in panel order).
    Lexicographic comparisons of state vectors read appliance 0 as the most
    significant position, matching the bitstring rendering.
    """

    m: int
    mask: int = 0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"state length must be >= 1, got {self.m}")
        if not (0 <= self.mask < (1 << self.m)):
            raise ValueError(f"mask {self.mask:#x} out of range for m={self.m}")

    @classmethod
    def zeros(cls, m: int) -> "StateVector":
        return cls(m, 0)

    @classmethod
    def ones(cls, m: int) -> "StateVector":
        return cls(m, (1 << m) - 1)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "StateVector":
        bits = list(bits)
        mask = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError(f"bit at position {i} must be 0 or 1, got {b!r}")
            mask |= b << i
        return cls(len(bits), mask)

    @classmethod
    def from_bitstring(cls, text: str) -> "StateVector":
        if not text or any(c not in "01" for c in text):
            raise ValueError(f"bitstring must be nonempty over '0'/'1', got {text!r}")
        return cls.from_bits(int(c) for c in text)

    def bit(self, i: int) -> int:
        if not (0 <= i < self.m):
            raise IndexError(f"appliance index {i} out of range for m={self.m}")
        return (self.mask >> i) & 1

    def bits(self) -> tuple[int, ...]:
        return tuple((self.mask >> i) & 1 for i in range(self.m))

    def to_bitstring(self) -> str:
        return "".join("1" if (self.mask >> i) & 1 else "0" for i in range(self.m))

    def on_count(self) -> int:
        return self.mask.bit_count()

    def hamming(self, other: "StateVector") -> int:
        if other.m != self.m:
            raise DimensionMismatchError(f"state lengths differ: {self.m} vs {other.m}")
        return (self.mask ^ other.mask).bit_count()

    def with_flips(self, positions: Iterable[int]) -> "StateVector":
        mask = self.mask
        for i in positions:
            if not (0 <= i < self.m):
                raise IndexError(f"appliance index {i} out of range for m={self.m}")
            mask ^= 1 << i
        return StateVector(self.m, mask)

    def __str__(self) -> str:
        return self.to_bitstring()


def state_bounds(state: StateVector, panel: AppliancePanel) -> tuple[float, float]:
    """Aggregate power interval [L, U] in watts for a state.

    Summation runs in appliance-index order so identical states always
    produce bit-identical bounds everywhere in the package.
    """
    if state.m != panel.m:
        raise DimensionMismatchError(f"state has m={state.m}, panel has m={panel.m}")
    lo = 0.0
    hi = 0.0
    mask = state.mask
    lowers = panel.lower_bounds()
    uppers = panel.upper_bounds()
    while mask:
        lsb = mask & -mask
        i = lsb.bit_length() - 1
        lo += lowers[i]
        hi += uppers[i]
        mask ^= lsb
    return lo, hi


def to_power(series: LoadSeries, panel: AppliancePanel) -> list[float]:
    """Convert per-slot watt-hours to average watts (y_i * sampling_per_hour)."""
    f = panel.sampling_per_hour
    return [v * f for v in series.values]


def overlap_index(panel: AppliancePanel) -> float:
    """Degree of overlap among appliance power ranges.

    Sum of range widths divided by the measure of their union: 1.0 for
    pairwise-disjoint ranges, m for m identical ranges.  Zero-width ranges
    contribute nothing to either term; if every range is zero-width the
    union has measure zero and the index is undefined.
    """
    widths = sum(a.width_w for a in panel.appliances)
    intervals = sorted(
        (a.lower_w, a.upper_w) for a in panel.appliances if a.upper_w > a.lower_w
    )
    union = 0.0
    cur_lo: float | None = None
    cur_hi = 0.0
    for lo, hi in intervals:
        if cur_lo is None or lo > cur_hi:
            if cur_lo is not None:
                union += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_lo is not None:
        union += cur_hi - cur_lo
    if union <= 0.0:
        raise DegenerateUnionError("all appliance ranges are zero-width")
    return widths / union


def min_window_size(panel: AppliancePanel) -> int:
    """Smallest lookahead window that can track m appliances at budget delta.

    max(ceil(m / (delta * overlap_index)), 1); when the overlap index is
    undefined (all ranges zero-width) the conservative fallback
    max(ceil(m / delta), 1) applies.
    """
    delta = panel.switch_budget
    if delta < 1:
        raise ValueError(f"switch_budget must be >= 1 to size a window, got {delta}")
    try:
        ratio = panel.m / (delta * overlap_index(panel))
    except DegenerateUnionError:
        ratio = panel.m / delta
    # Guard against float jitter bumping an exact integer ratio up a step.
    return max(math.ceil(ratio - 1e-9), 1)


def neighbor_count(m: int, delta: int) -> int:
    """Number of 0-1 vectors within Hamming distance delta of a fixed anchor.

    Exact integer arithmetic; Python integers cannot overflow.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (0 <= delta <= m):
        raise ValueError(f"delta must be in [0, {m}], got {delta}")
    return sum(math.comb(m, k) for k in range(delta + 1))


def iter_states(m: int) -> Iterator[StateVector]:
    """All 2^m states in mask order; intended for tiny m in tests/oracles."""
    for mask in range(1 << m):
        yield StateVector(m, mask)
