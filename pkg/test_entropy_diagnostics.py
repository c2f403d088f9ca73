#!/usr/bin/env python3
"""
Tests for entropy production, merge jumps and the total entropy ledger
"""

import sys

import numpy as np
import pytest

from conftest import golden_run, simple_data
from entropy_diagnostics import (
    INTERNAL_ENERGY, KINETIC_ENERGY, FanCrossing, auto_window, boundary_flux, delta_D_sdw_cd,
    entropy_drop_at_merge, entropy_report, front_production, merge_entropy_jump, production,
    production_rate_identity, semi_convex_pair, total_entropy,
)
from fluid_states import FluidState, build_partition, sample_states
from front_tracker import initialize
from sdwtrack_errors import PreconditionError
from shadow_waves import SdwTrajectory, kind_for, simple_wave


def test_symmetric_production(symmetric_states):
    """rho = 1, u_l = 1, u_r = -1 at u_s = 0 produces -1"""
    wave = SdwTrajectory(birth_time=0.0, birth_position=0.0, gamma=1.0, c0=0.0,
                         left=symmetric_states[0], right=symmetric_states[1], kind=kind_for(*symmetric_states))
    assert production(wave, 0.5) == pytest.approx(-1.0)


def test_merge_drop():
    assert entropy_drop_at_merge(2.0, 1.0, 1.0, -2.0) == pytest.approx(-3.0)
    assert entropy_drop_at_merge(0.0, 1.0, 1.0, -2.0) == 0.0
    with pytest.raises(PreconditionError):
        entropy_drop_at_merge(0.0, 1.0, 0.0, -2.0)
    assert merge_entropy_jump([2.0, 1.0], [1.0, -2.0]) == pytest.approx(-3.0)
    assert merge_entropy_jump([0.0, 0.0], [1.0, -2.0]) == 0.0


def test_fan_crossing_jumps():
    assert delta_D_sdw_cd(FanCrossing.ENTER_FAN, 1.0, 0.0, 1.0) == pytest.approx(0.5)
    assert delta_D_sdw_cd(FanCrossing.EXIT_FAN, 1.0, 0.0, 1.0) == pytest.approx(-0.5)
    assert delta_D_sdw_cd(FanCrossing.ENTER_FAN, 1.0, 1.0, 1.0) == 0.0


def test_constant_density_merge_rate():
    """Merging straight waves (3, 2) and (2, 1) at rho = 2 changes the production by -1.5"""
    a, b, c = FluidState(rho=2.0, u=3.0), FluidState(rho=2.0, u=2.0), FluidState(rho=2.0, u=1.0)
    before = production(simple_wave(a, b, 0.0, 0.0), 1.0) + production(simple_wave(b, c, 1.0, 0.0), 1.0)
    after = production(simple_wave(a, c, 2.5, 1.0), 1.0)
    assert after - before == pytest.approx(-1.5)


def test_production_is_nonpositive_and_relaxes(unequal_states):
    """Along a bending shadow wave the production stays negative and increases"""
    wave = SdwTrajectory(birth_time=0.0, birth_position=0.0, gamma=0.5, c0=1.5,
                         left=unequal_states[0], right=unequal_states[1], kind=kind_for(*unequal_states))
    rates = [production(wave, t) for t in np.linspace(0.0, 5.0, 51)]
    assert all(r <= 0.0 for r in rates)
    assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))


def test_simple_wave_production_is_constant(unequal_states):
    wave = simple_wave(*unequal_states, position=0.0, time=0.0)
    assert production(wave, 0.1) == pytest.approx(production(wave, 4.0), rel=1e-13)


def test_constant_state_entropy():
    """Without fronts the window holds rho u^2 / 2 times its length"""
    data = simple_data((1.0, 2.0), rho=1.0, u=2.0)
    p = build_partition(data, 1e-3)
    fan = initialize(sample_states(data, p), p).run_until(1.0)
    assert total_entropy(fan, 0.5, 3.0) == pytest.approx(2.0 * 6.0)
    assert boundary_flux(fan) == 0.0
    assert total_entropy(fan, 0.5, 3.0, semi_convex_pair(name="u2")) == pytest.approx(4.0 * 6.0)


def test_window_must_hold_every_front():
    data = simple_data((1.0, 3.0), rho=1.0, u=2.0)
    p = build_partition(data, 1e-3)
    fan = initialize(sample_states(data, p), p).run_until(1.0)
    assert total_entropy(fan, 1.0, auto_window(fan, 1.0)) > 0.0
    with pytest.raises(PreconditionError):
        total_entropy(fan, 1.0, 1.0)


def test_production_identity():
    """dE/dt equals the summed production plus the boundary inflow between events"""
    config, fan = golden_run("case_ii_absorbing")
    M = auto_window(fan, config.t_end)
    event_times = np.array([e.time for e in fan.history])
    checked = 0
    for t in np.linspace(0.05, config.t_end - 0.05, 40):
        if event_times.size and np.min(np.abs(event_times - t)) < 1e-3:
            continue
        assert abs(production_rate_identity(fan, float(t), M)) < 1e-6
        checked += 1
    assert checked > 10


def test_measured_jumps_match_merge_formula():
    config, fan = golden_run("case_iii_constant_rho")
    report = entropy_report(fan, [0.0, 0.5, 1.0])
    assert len(report.events) == len(fan.history)
    for event in report.events:
        assert event.measured_delta_E == pytest.approx(event.delta_E, abs=1e-10)
        assert event.delta_E <= 0.0


def test_constant_density_production_jumps():
    """Two-wave merges at constant density change the production by -3/8 rho [u] (u_l - u_m)(u_m - u_r)"""
    _, fan = golden_run("case_iii_constant_rho")
    report = entropy_report(fan, [1.0])
    rho = 2.0
    for event, record in zip(fan.history, report.events):
        if len(event.participants) != 2:
            continue
        first, second = (fan.registry[i] for i in event.participants)
        u_l, u_m, u_r = first.left.u, first.right.u, second.right.u
        expected = -0.375 * rho * (u_l - u_r) * (u_l - u_m) * (u_m - u_r)
        assert record.delta_D == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_internal_energy_never_increases_at_events():
    """For eta = -rho e every merge turns kinetic energy into internal energy"""
    config, fan = golden_run("three_by_three")
    report = entropy_report(fan, [0.0, config.t_end], pair=INTERNAL_ENERGY)
    assert report.pair == "internal_energy"
    assert report.events
    for event in report.events:
        assert event.measured_delta_E <= 1e-12


def test_energy_balance_along_every_shadow_front():
    """Each atom gains energy at the rate E_l(u_l - u_s) + E_r(u_s - u_r) over its whole life"""
    config, fan = golden_run("three_by_three")
    shadows = [f for f in fan.registry.values() if f.is_shadow]
    assert shadows
    h, margin = 1e-4, 1e-3
    checked = 0
    for front in shadows:
        wave = front.trajectory
        end = config.t_end if front.death_time is None else front.death_time
        if end - front.birth_time < 4.0 * margin:
            continue
        for t in np.linspace(front.birth_time + margin, end - margin, 7):
            H = wave.total_energy
            rate = (-H(t + 2 * h) + 8 * H(t + h) - 8 * H(t - h) + H(t - 2 * h)) / (12 * h)
            u_s = wave.speed(t)
            inflow = wave.left.energy * (wave.left.u - u_s) + wave.right.energy * (u_s - wave.right.u)
            assert abs(rate - inflow) < 1e-8 * (1.0 + abs(inflow))
            checked += 1
    assert checked > 0


def test_report_collects_production_curves():
    config, fan = golden_run("case_ii_absorbing")
    times = list(np.linspace(0.0, config.t_end, 9))
    report = entropy_report(fan, times)
    assert report.pair == KINETIC_ENERGY.name
    assert [t for t, _ in report.total_entropy] == times
    assert report.front_production
    for samples in report.front_production.values():
        assert all(rate <= 1e-12 for _, rate in samples)
    assert len(report.event_drops) == len(fan.history)
    chain = fan.zero_chain()
    assert front_production(chain[0], 0.5) <= 0.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
