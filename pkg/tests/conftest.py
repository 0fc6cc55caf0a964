"""Shared fixtures: small hand-checkable panels and series builders."""

from __future__ import annotations

import pytest

from loadclean.model import AppliancePanel, ApplianceProfile, LoadSeries


def make_panel(
    ranges: list[tuple[float, float]],
    sampling_per_hour: float = 1.0,
    switch_budget: int = 1,
) -> AppliancePanel:
    """Panel from (lower, upper) watt pairs; watt-hours equal watts at f=1."""
    appliances = tuple(
        ApplianceProfile(name=f"A{i + 1}", lower_w=lo, upper_w=hi)
        for i, (lo, hi) in enumerate(ranges)
    )
    return AppliancePanel(
        appliances=appliances,
        sampling_per_hour=sampling_per_hour,
        switch_budget=switch_budget,
    )


@pytest.fixture
def three_appliance_panel() -> AppliancePanel:
    """Three disjoint ranges, so every aggregate identifies its ON set."""
    return make_panel([(2.0, 4.0), (10.0, 12.0), (30.0, 32.0)], switch_budget=1)


def series(*values: float) -> LoadSeries:
    return LoadSeries(tuple(float(v) for v in values))
