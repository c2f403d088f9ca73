#!/usr/bin/env python3
"""
Tests for the wave fan and the interaction event loop
"""

import sys

import numpy as np
import pytest

from conftest import GOLDEN, golden_run, simple_data
from convergence_analysis import check_uniform_bounds, conservation_ledger, run_level
from fluid_states import build_partition, sample_states
from front_tracker import count_fronts, initialize, run_until
from sdwtrack_errors import PreconditionError
from shadow_waves import FrontKind


def fan_for(data, epsilon=1e-3):
    p = build_partition(data, epsilon)
    return initialize(sample_states(data, p), p)


def test_constant_data_has_no_fronts():
    fan = run_until(fan_for(simple_data((1.0, 2.0), rho=1.0, u=2.0)), 1.0)
    assert count_fronts(fan) == 0
    assert fan.history == []
    assert fan.root_ids == ()
    assert fan.zero_chain() == []


def test_single_riemann_problem(symmetric_states):
    """A jump at R only gives one simple wave at R"""
    fan = fan_for(simple_data((1.0, 1.0), rho=1.0, u=-1.0))
    assert count_fronts(fan) == 1
    front = fan.fronts[0]
    assert front.is_shadow
    assert front.left == symmetric_states[0]
    assert fan.zero_chain() == [front]


def test_initial_fan_follows_the_partition(linear_data):
    """Increasing data open a vacuum fan between contacts at every point"""
    fan = fan_for(linear_data)
    assert count_fronts(fan) == 2 * (len(fan.partition) - 1)
    assert all(f.kind == FrontKind.FAN_EDGE for f in fan.fronts)
    assert fan.index_set == tuple(range(len(fan.partition)))
    run_until(fan, 1.0)
    assert fan.history == []
    assert fan.pending_events() == 0


def test_run_until_rejects_the_past():
    fan = golden_run("case_ii_absorbing")[1]
    with pytest.raises(PreconditionError):
        fan.run_until(1.0)
    with pytest.raises(PreconditionError):
        fan.fronts_at(fan.t_now + 1.0)
    with pytest.raises(PreconditionError):
        fan.fronts_at(-1.0)


def test_front_count_bookkeeping():
    """Every event replaces its participants by exactly one front"""
    for name in GOLDEN:
        config, fan = golden_run(name)
        initial = len(fan.fronts_at(0.0))
        merged = sum(len(e.participants) - 1 for e in fan.history)
        assert count_fronts(fan) == initial - merged


def test_event_log_is_ordered():
    for name in GOLDEN:
        _, fan = golden_run(name)
        times = [e.time for e in fan.history]
        assert times == sorted(times)


def test_merge_is_exact():
    """Strength and momentum of the outgoing wave equal the incoming sums"""
    for name in GOLDEN:
        _, fan = golden_run(name)
        for event in fan.history:
            gamma = sum(event.incoming_strengths)
            momentum = sum(xi * u for xi, u in zip(event.incoming_strengths, event.incoming_speeds))
            assert event.gamma == pytest.approx(gamma, rel=1e-12, abs=1e-300)
            if gamma > 0.0:
                assert event.gamma * event.c0 == pytest.approx(momentum, rel=1e-12, abs=1e-12)


def test_fronts_stay_ordered():
    for name in GOLDEN:
        config, fan = golden_run(name)
        for t in np.linspace(0.0, config.t_end, 41):
            xs = [f.position(t) for f in fan.fronts_at(float(t))]
            assert all(b >= a - 1e-9 * (1 + abs(a)) for a, b in zip(xs, xs[1:]))


def test_golden_runs_conserve_and_stay_bounded():
    for name in GOLDEN:
        config, fan = golden_run(name)
        times = list(np.linspace(0.0, config.t_end, 11))
        ledger = conservation_ledger(fan, times)
        assert max(row.worst for row in ledger) < 1e-9, name
        report = check_uniform_bounds(fan, times, config.initial_data)
        assert report.ok, name


def test_fronts_never_leave_the_window():
    """No front reaches the padded window edge, so none ever needs freezing"""
    for name in GOLDEN:
        config, fan = golden_run(name)
        for t in np.linspace(0.0, config.t_end, 11):
            lo, hi = fan.window(t)
            for front in fan.fronts_at(t):
                assert lo < front.position(t) < hi, name
        assert all(abs(f.speed(config.t_end)) <= fan.max_speed() * (1 + 1e-12) for f in fan.fronts), name


def test_bounds_use_the_initial_velocity_range():
    """The admissible speed range spans u0 and the whole profile, not just the sampled states"""
    config, fan = golden_run("case_ii_absorbing")
    times = list(np.linspace(0.0, config.t_end, 11))
    report = check_uniform_bounds(fan, times, config.initial_data)
    assert report.speed_range == pytest.approx((0.0, 2.0))
    sampled = check_uniform_bounds(fan, times)
    assert sampled.speed_range[0] > 0.0
    assert sampled.speed_range[1] == pytest.approx(2.0)


def test_constant_density_fronts_are_straight():
    """With constant density every shadow wave keeps the speed it was born with"""
    config, fan = golden_run("case_iii_constant_rho")
    assert fan.history
    for front in fan.registry.values():
        if front.is_shadow:
            end = front.death_time if front.death_time is not None else config.t_end
            for t in np.linspace(front.birth_time, end, 5):
                assert front.speed(float(t)) == pytest.approx(front.trajectory.c0, rel=1e-12)


def test_simultaneous_collision_is_one_event():
    """Decreasing linear data focus all simple waves at one point"""
    _, fan = golden_run("case_iv_vacuum")
    clusters = [e for e in fan.history if len(e.participants) > 2]
    assert clusters
    assert clusters[0].time == pytest.approx(1.0, abs=1e-9)
    assert clusters[0].position == pytest.approx(0.95, abs=1e-9)


def test_absorbing_chain():
    """The wave born at R absorbs its neighbors one after another"""
    _, fan = golden_run("case_ii_absorbing")
    chain = fan.zero_chain()
    assert len(chain) > 1
    assert chain[0].birth_position == 0.0
    for parent, child in zip(chain, chain[1:]):
        assert parent.front_id in child.parents
        assert parent.death_time == child.birth_time


def test_stopping_chain():
    """With u0 below sup u the 0-SDW ends up chasing a fan it can never leave"""
    config, _ = golden_run("case_ii_stopping")
    fan = run_level(config).run_until(200.0)
    assert fan.pending_events() == 0
    last = fan.zero_chain()[-1]
    assert last.right.is_vacuum
    assert last.right.fan.u_right >= config.initial_data.left_state.u
    assert last.speed(200.0) < config.initial_data.left_state.u


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
