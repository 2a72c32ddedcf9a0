"""Tests for workload generation and bounded demand evolution."""

import io
import random

import pytest

from regimesim.workload import (
    ApplicationDescriptor,
    LoadProfile,
    advance_demand,
    generate_initial_load,
    parse_demand_trace,
)


def server_totals(servers):
    return [sum(a.demand for a in apps) for apps in servers]


def test_low_profile_totals_in_range():
    """Every server's initial total lands inside [0.20, 0.40]."""
    servers = generate_initial_load(LoadProfile.low_avg_30(), 100, rng_seed=1)
    for total in server_totals(servers):
        assert 0.20 <= total <= 0.40


def test_high_profile_totals_in_range():
    """Every server's initial total lands inside [0.60, 0.80]."""
    servers = generate_initial_load(LoadProfile.high_avg_70(), 100, rng_seed=1)
    for total in server_totals(servers):
        assert 0.60 <= total <= 0.80


def test_degenerate_custom_range():
    """A zero-width range pins every server's total exactly."""
    servers = generate_initial_load(LoadProfile.custom(0.5, 0.5), 20, rng_seed=3)
    for apps in servers:
        assert sum(a.demand for a in apps) == pytest.approx(0.5, abs=1e-12)
        # the split is even, so each of the four apps carries a quarter
        for a in apps:
            assert a.demand == pytest.approx(0.125, abs=1e-12)


def test_generation_is_deterministic():
    """The same seed reproduces the identical assignment."""
    a = generate_initial_load(LoadProfile.low_avg_30(), 50, rng_seed=7)
    b = generate_initial_load(LoadProfile.low_avg_30(), 50, rng_seed=7)
    assert a == b


def test_distinct_seeds_differ():
    """Different seeds give different draws."""
    a = generate_initial_load(LoadProfile.low_avg_30(), 50, rng_seed=7)
    b = generate_initial_load(LoadProfile.low_avg_30(), 50, rng_seed=8)
    assert a != b


def test_initial_mean_approaches_profile_midpoint():
    """Over a thousand servers the mean total approaches the midpoint."""
    low = generate_initial_load(LoadProfile.low_avg_30(), 1000, rng_seed=11)
    high = generate_initial_load(LoadProfile.high_avg_70(), 1000, rng_seed=11)
    mean_low = sum(server_totals(low)) / 1000
    mean_high = sum(server_totals(high)) / 1000
    assert abs(mean_low - 0.30) <= 0.02
    assert abs(mean_high - 0.70) <= 0.02


def test_lambda_draws_within_configured_range():
    """Per-application growth bounds come from the configured range."""
    servers = generate_initial_load(
        LoadProfile.low_avg_30(), 200, rng_seed=5, lambda_range=(0.01, 0.05)
    )
    for apps in servers:
        for a in apps:
            assert 0.01 <= a.lam <= 0.05


def test_app_ids_unique_and_homed():
    """Identifiers are globally unique and homed to their server index."""
    servers = generate_initial_load(LoadProfile.low_avg_30(), 30, rng_seed=2)
    seen = set()
    for idx, apps in enumerate(servers):
        for a in apps:
            assert a.app_id not in seen
            seen.add(a.app_id)
            assert a.home_server == idx


def test_advance_stays_within_lambda():
    """One step moves demand by at most lambda."""
    rng = random.Random(0)
    app = ApplicationDescriptor(app_id=0, demand=0.30, lam=0.05, home_server=0)
    advance_demand(app, rng)
    assert 0.25 <= app.demand <= 0.35


def test_advance_clamps_at_one():
    """Demand near the ceiling stays within [0.94, 1.00]."""
    rng = random.Random(0)
    app = ApplicationDescriptor(app_id=0, demand=0.99, lam=0.05, home_server=0)
    advance_demand(app, rng)
    assert 0.94 <= app.demand <= 1.00


def test_advance_clamps_at_zero():
    """Demand near the floor never goes negative."""
    rng = random.Random(1)
    for _ in range(100):
        app = ApplicationDescriptor(app_id=0, demand=0.01, lam=0.05, home_server=0)
        advance_demand(app, rng)
        assert app.demand >= 0.0


def test_advance_bound_over_many_draws():
    """Ten thousand draws never exceed the growth bound."""
    rng = random.Random(42)
    app = ApplicationDescriptor(app_id=0, demand=0.50, lam=0.05, home_server=0)
    worst = 0.0
    for _ in range(10_000):
        before = app.demand
        advance_demand(app, rng)
        worst = max(worst, abs(app.demand - before))
    assert worst <= 0.05 + 1e-12


def test_lambda_zero_is_static():
    """A zero growth bound freezes demand."""
    rng = random.Random(9)
    app = ApplicationDescriptor(app_id=0, demand=0.40, lam=0.0, home_server=0)
    for _ in range(50):
        advance_demand(app, rng)
    assert app.demand == pytest.approx(0.40, abs=1e-15)


def test_custom_range_validation():
    """Custom ranges outside [0, 1] or inverted are rejected."""
    with pytest.raises(ValueError):
        LoadProfile.custom(-0.1, 0.5)
    with pytest.raises(ValueError):
        LoadProfile.custom(0.5, 1.2)
    with pytest.raises(ValueError):
        LoadProfile.custom(0.6, 0.4)


def test_trace_parsing_round_trip():
    """A well-formed trace parses into the interval -> app -> demand map."""
    text = "0,1,0.25\n0,2,0.50\n1,1,0.30\n"
    trace = parse_demand_trace(io.StringIO(text))
    assert trace == {0: {1: 0.25, 2: 0.50}, 1: {1: 0.30}}


def test_trace_parsing_skips_blank_and_comment_lines():
    """Blank lines and comment lines do not produce records."""
    text = "\n# header comment\n0,1,0.25\n\n"
    trace = parse_demand_trace(io.StringIO(text))
    assert trace == {0: {1: 0.25}}


def test_trace_parsing_reports_bad_line():
    """A malformed line raises with its line number."""
    text = "0,1,0.25\nnot-a-record\n"
    with pytest.raises(ValueError) as err:
        parse_demand_trace(io.StringIO(text))
    assert "2" in str(err.value)


def test_trace_parsing_rejects_out_of_range_demand():
    """Demand outside [0, 1] is rejected."""
    with pytest.raises(ValueError):
        parse_demand_trace(io.StringIO("0,1,1.5\n"))
