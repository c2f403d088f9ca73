#!/usr/bin/env python3
"""
Tests for the closed-form shadow-wave trajectories
"""

import sys
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from convergence_analysis import closed_form_error, oracle_sweep
from fluid_states import FluidState
from sdwtrack_errors import PreconditionError
from shadow_waves import (
    FrontCurve, FrontKind, SdwKind, SdwTrajectory, contact_front, kind_for, shadow_front, simple_wave,
)

TIMES = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0]


def trajectory(left, right, gamma, c0, position=0.0, time=0.0, e_s0=None):
    return SdwTrajectory(birth_time=time, birth_position=position, gamma=gamma, c0=c0,
                         left=left, right=right, kind=kind_for(left, right), e_s0=e_s0)


@st.composite
def admissible(draw):
    rho_l = draw(st.floats(min_value=0.1, max_value=5.0))
    rho_r = draw(st.floats(min_value=0.1, max_value=5.0))
    u_r = draw(st.floats(min_value=-3.0, max_value=3.0))
    u_l = u_r + draw(st.floats(min_value=0.01, max_value=5.0))
    share = draw(st.floats(min_value=0.0, max_value=1.0))
    gamma = draw(st.floats(min_value=0.01, max_value=5.0))
    left, right = FluidState(rho=rho_l, u=u_l), FluidState(rho=rho_r, u=u_r)
    return trajectory(left, right, gamma, u_r + share * (u_l - u_r))


def test_symmetric_wave(symmetric_states):
    """Equal densities with c0 = y: straight front with linear strength 1 + 2t"""
    wave = trajectory(*symmetric_states, gamma=1.0, c0=0.0)
    assert wave.strength(1.0) == pytest.approx(3.0, rel=1e-14)
    assert wave.speed(1.0) == 0.0
    assert wave.position(1.0) == 0.0
    assert wave.momentum(1.0) == 0.0


def test_simple_wave_is_straight(unequal_states):
    wave = simple_wave(*unequal_states, position=0.5, time=1.0)
    assert wave.gamma == 0.0
    assert wave.strength(3.0) == pytest.approx(8.0, rel=1e-14)
    assert wave.speed(3.0) == pytest.approx(2.0 / 3.0, rel=1e-14)
    assert wave.position(3.0) == pytest.approx(0.5 + 4.0 / 3.0, rel=1e-14)
    with pytest.raises(PreconditionError):
        simple_wave(unequal_states[1], unequal_states[0], position=0.0, time=0.0)


def test_birth_preconditions(unequal_states):
    left, right = unequal_states
    with pytest.raises(PreconditionError):
        trajectory(left, right, gamma=1.0, c0=3.0)
    with pytest.raises(PreconditionError):
        trajectory(left, right, gamma=-1.0, c0=1.0)
    with pytest.raises(PreconditionError):
        trajectory(left, right, gamma=0.0, c0=1.0)
    with pytest.raises(PreconditionError):
        SdwTrajectory(birth_time=0.0, birth_position=0.0, gamma=1.0, c0=1.0,
                      left=left, right=right, kind=SdwKind.RIGHT_VACUUM)
    wave = trajectory(left, right, gamma=1.0, c0=1.0, time=2.0)
    with pytest.raises(PreconditionError):
        wave.strength(1.0)


def test_closed_forms_against_balance_ode(unequal_states):
    """Unequal densities with c0 away from y bend the front toward the limit speed"""
    wave = trajectory(*unequal_states, gamma=0.5, c0=1.5)
    assert closed_form_error(wave, TIMES) < 1e-9
    assert wave.limit_speed == pytest.approx(2.0 / 3.0)
    speeds = [wave.speed(t) for t in TIMES]
    assert all(a >= b for a, b in zip(speeds, speeds[1:]))
    assert speeds[-1] > wave.limit_speed


def test_oracle_sweep():
    """Ten thousand random waves agree with a tight ODE solve within a few seconds"""
    started = time.perf_counter()
    assert oracle_sweep(10_000, seed=7) < 1e-8
    assert time.perf_counter() - started < 10.0


@settings(max_examples=40, deadline=None)
@given(wave=admissible(), t=st.floats(min_value=0.01, max_value=5.0))
def test_overcompressive_property(wave, t):
    """u_r <= u_s(t) <= u_l and the speed never crosses its limit"""
    u_s = wave.speed(t)
    slack = 1e-12 * (1.0 + abs(u_s))
    assert wave.right.u - slack <= u_s <= wave.left.u + slack
    low, high = wave.speed_bounds(0.0)
    assert low - slack <= u_s <= high + slack


@settings(max_examples=40, deadline=None)
@given(wave=admissible(), t=st.floats(min_value=0.05, max_value=5.0))
def test_derivatives_property(wave, t):
    """Position differentiates to speed, speed to acceleration"""
    h = 1e-5
    dc = (wave.position(t + h) - wave.position(t - h)) / (2 * h)
    assert dc == pytest.approx(wave.speed(t), rel=1e-6, abs=1e-6)
    du = (wave.speed(t + h) - wave.speed(t - h)) / (2 * h)
    assert du == pytest.approx(wave.acceleration(t), rel=1e-4, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(wave=admissible(), t=st.floats(min_value=0.0, max_value=10.0))
def test_strength_and_position_bounds(wave, t):
    low, high = wave.strength_bounds(t)
    xi = wave.strength(t)
    assert low * (1 - 1e-12) <= xi <= high * (1 + 1e-12)
    drift = wave.birth_position + wave.c0 * t
    assert abs(wave.position(t) - drift) <= wave.position_deviation_bound(t) * (1 + 1e-9) + 1e-12


def test_right_vacuum_wave():
    """With vacuum on the right the atom accelerates toward u_l and grows like sqrt(t)"""
    left, vacuum = FluidState(rho=1.0, u=1.0), FluidState(rho=0.0, u=0.0)
    wave = trajectory(left, vacuum, gamma=1.0, c0=0.0)
    assert wave.kind == SdwKind.RIGHT_VACUUM
    assert wave.limit_speed == 1.0
    assert closed_form_error(wave, TIMES) < 1e-9
    assert wave.strength(3.0) == pytest.approx(np.sqrt(1.0 + 6.0))
    assert 0.0 < wave.speed(3.0) < 1.0


def test_left_vacuum_wave():
    vacuum, right = FluidState(rho=0.0, u=0.0), FluidState(rho=2.0, u=-1.0)
    wave = trajectory(vacuum, right, gamma=1.0, c0=1.0)
    assert wave.kind == SdwKind.LEFT_VACUUM
    assert closed_form_error(wave, TIMES) < 1e-9
    assert -1.0 < wave.speed(5.0) < 1.0


def test_double_vacuum_wave():
    vacuum = FluidState(rho=0.0, u=0.0)
    wave = trajectory(vacuum, vacuum, gamma=2.0, c0=0.5, position=1.0)
    assert wave.strength(4.0) == 2.0
    assert wave.position(4.0) == pytest.approx(3.0)


def test_energy_balance():
    """The atom energy grows by the inflow E_l(u_l - u_s) + E_r(u_s - u_r)"""
    left, right = FluidState(rho=1.0, u=2.0, e=0.5), FluidState(rho=3.0, u=-1.0, e=0.2)
    wave = trajectory(left, right, gamma=1.0, c0=0.5, e_s0=0.1)

    def inflow(t):
        u_s = wave.speed(t)
        return left.energy * (left.u - u_s) + right.energy * (u_s - right.u)

    for t in (0.5, 1.0, 3.0):
        gained, _ = quad(inflow, 0.0, t, epsabs=1e-13, epsrel=1e-13)
        assert wave.total_energy(t) == pytest.approx(wave.total_energy(0.0) + gained, rel=1e-10)
        assert wave.energy_component(t) >= 0.0
        h = 1e-5
        rate = (wave.total_energy(t + h) - wave.total_energy(t - h)) / (2 * h)
        assert abs(rate - inflow(t)) < 1e-7


def test_simple_wave_energy():
    left, right = FluidState(rho=1.0, u=2.0, e=0.5), FluidState(rho=1.0, u=0.0, e=0.5)
    wave = simple_wave(left, right, position=0.0, time=0.0, with_energy=True)
    # inflow 3 at strength rate 2, minus y^2/2 with y = 1
    assert wave.e_s0 == pytest.approx(1.0)
    assert wave.energy_component(2.0) == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        simple_wave(left, right, position=0.0, time=0.0).energy_component(1.0)


def test_front_wrappers(unequal_states):
    left, right = unequal_states
    contact = contact_front(0, left, FluidState(rho=2.0, u=2.0), anchor=1.0)
    assert contact.kind == FrontKind.CONTACT
    assert contact.position(2.0) == pytest.approx(5.0)
    assert contact.strength(2.0) == 0.0
    front = shadow_front(1, simple_wave(left, right, 0.0, 1.0), parents=(3, 4))
    assert front.is_shadow
    assert front.birth_time == 1.0
    assert front.is_alive(1.0)
    assert not front.is_alive(1.0, before=True)
    front.death_time = 2.0
    assert not front.is_alive(2.0)
    assert front.is_alive(2.0, before=True)
    line = FrontCurve.straight(anchor=0.0, birth_time=0.0, speed=-1.0)
    assert line.is_straight
    assert line.position(3.0) == -3.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
