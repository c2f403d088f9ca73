"""
Shadow Waves for pressureless gas dynamics
Closed-form strength, speed and front position of a delta shock born at (X0, T0),
plus the front objects the tracker keeps in its fan
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Optional, Tuple

from fluid_states import FluidState
from riemann_solver import intermediate_speed, strength_rate
from sdwtrack_errors import PreconditionError

logger = logging.getLogger(__name__)

OVERCOMPRESSIVE_TOL = 1e-9
POSITION_CACHE_SIZE = 128


class SdwKind(str, Enum):
    """Which neighbor states of a shadow wave are vacuum"""
    BULK = "bulk"
    LEFT_VACUUM = "left_vacuum"
    RIGHT_VACUUM = "right_vacuum"
    DOUBLE_VACUUM = "double_vacuum"


class FrontKind(str, Enum):
    """Kind of front kept by the tracker"""
    CONTACT = "contact"
    SHADOW = "shadow"
    FAN_EDGE = "fan_edge"


def kind_for(left: FluidState, right: FluidState) -> SdwKind:
    if left.is_vacuum and right.is_vacuum:
        return SdwKind.DOUBLE_VACUUM
    if left.is_vacuum:
        return SdwKind.LEFT_VACUUM
    if right.is_vacuum:
        return SdwKind.RIGHT_VACUUM
    return SdwKind.BULK


@dataclass(frozen=True)
class _Coefficients:
    a: float  # rho_l rho_r [u]^2
    b: float  # c0 [rho] - [rho u], non-negative under overcompressibility
    y: float  # limit speed
    k: float  # [rho] (c0 - z), finite for equal densities


@dataclass(frozen=True)
class SdwTrajectory:
    """Shadow wave born at (birth_position, birth_time) with strength gamma and speed c0"""
    birth_time: float
    birth_position: float
    gamma: float
    c0: float
    left: FluidState
    right: FluidState
    kind: SdwKind
    e_s0: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.gamma) or self.gamma < 0.0:
            raise PreconditionError(f"strength must be non-negative, got {self.gamma}")
        if self.kind != kind_for(self.left, self.right):
            raise PreconditionError(f"kind {self.kind.value} does not match the neighbor states")
        tol = OVERCOMPRESSIVE_TOL * (1.0 + abs(self.c0))
        if not self.left.is_vacuum and self.c0 > self.left.u + tol:
            raise PreconditionError(f"c0={self.c0} exceeds u_l={self.left.u}")
        if not self.right.is_vacuum and self.c0 < self.right.u - tol:
            raise PreconditionError(f"c0={self.c0} is below u_r={self.right.u}")
        if self.gamma == 0.0:
            if self.kind != SdwKind.BULK:
                raise PreconditionError("zero-strength births need two non-vacuum states")
            if abs(self.c0 - intermediate_speed(self.left, self.right)) > tol:
                raise PreconditionError("zero-strength births must travel with the intermediate speed")

    @cached_property
    def _coefficients(self) -> _Coefficients:
        left, right, c0 = self.left, self.right, self.c0
        s, q = math.sqrt(left.rho), math.sqrt(right.rho)
        a = left.rho * right.rho * (left.u - right.u) ** 2
        b = 0.0
        if not right.is_vacuum:
            b += right.rho * (c0 - right.u)
        if not left.is_vacuum:
            b += left.rho * (left.u - c0)
        b = max(b, 0.0)
        if self.kind == SdwKind.DOUBLE_VACUUM:
            return _Coefficients(a=0.0, b=0.0, y=c0, k=0.0)
        y = intermediate_speed(left, right)
        k = (q + s) * ((q - s) * c0 + s * left.u - q * right.u)
        return _Coefficients(a=a, b=b, y=y, k=k)

    def elapsed(self, t: float) -> float:
        tau = t - self.birth_time
        if tau < -1e-12 * (1.0 + abs(t)):
            raise PreconditionError(f"t={t} precedes the birth time {self.birth_time}")
        return max(tau, 0.0)

    def strength(self, t: float) -> float:
        """Mass xi(t) carried by the atom"""
        tau = self.elapsed(t)
        co = self._coefficients
        g = self.gamma
        return math.sqrt(g * g + 2.0 * g * co.b * tau + co.a * tau * tau)

    def speed(self, t: float) -> float:
        """Speed u_s(t), monotone from c0 toward the limit speed"""
        tau = self.elapsed(t)
        co = self._coefficients
        if tau == 0.0 or co.k == 0.0 or self.c0 == co.y:
            return self.c0
        xi = self.strength(t)
        denominator = xi * (co.a * tau + co.b * (self.gamma + xi))
        if denominator <= 0.0:
            return self.c0
        g = tau * (co.a * tau + 2.0 * self.gamma * co.b) / denominator
        return self.c0 - (self.c0 - co.y) * co.k * g

    def acceleration(self, t: float) -> float:
        """u_s'(t) = -gamma^2 (c0 - y) [rho] (c0 - z) / xi^3"""
        co = self._coefficients
        xi = self.strength(t)
        if xi == 0.0 or self.gamma == 0.0:
            return 0.0
        return -self.gamma ** 2 * (self.c0 - co.y) * co.k / xi ** 3

    def position(self, t: float) -> float:
        """Front c(t), the exact antiderivative of the speed"""
        tau = self.elapsed(t)
        co = self._coefficients
        if tau == 0.0:
            return self.birth_position
        xi = self.strength(t)
        drift = self.c0 * tau
        denominator = xi + self.gamma + co.b * tau
        if co.k == 0.0 or denominator <= 0.0:
            return self.birth_position + drift
        return self.birth_position + drift - (self.c0 - co.y) * co.k * tau * tau / denominator

    def momentum(self, t: float) -> float:
        return self.strength(t) * self.speed(t)

    @property
    def limit_speed(self) -> float:
        co = self._coefficients
        return self.c0 if co.k == 0.0 else co.y

    def energy_component(self, t: float) -> float:
        """Specific internal energy e_s(t) of the atom from the energy balance"""
        if self.e_s0 is None:
            raise PreconditionError("energy component is only defined in 3x3 mode")
        tau = self.elapsed(t)
        xi = self.strength(t)
        if tau == 0.0 or xi == 0.0:
            return self.e_s0
        jump_energy = self.right.energy - self.left.energy
        jump_flux = self.right.u * self.right.energy - self.left.u * self.left.energy
        total = (self.gamma * (0.5 * self.c0 ** 2 + self.e_s0)
                 + jump_energy * (self.position(t) - self.birth_position)
                 - jump_flux * tau)
        u_s = self.speed(t)
        return total / xi - 0.5 * u_s * u_s

    def total_energy(self, t: float) -> float:
        """Energy xi (u_s^2/2 + e_s) carried by the atom"""
        u_s = self.speed(t)
        return self.strength(t) * (0.5 * u_s * u_s + self.energy_component(t))

    def strength_bounds(self, t: float) -> Tuple[float, float]:
        """Linear lower and upper bounds of the strength for waves between two non-vacuum states"""
        tau = self.elapsed(t)
        jump = self.left.u - self.right.u
        low = min(self.left.rho, self.right.rho)
        high = max(self.left.rho, self.right.rho)
        return self.gamma + low * jump * tau, self.gamma + high * jump * tau

    def position_deviation_bound(self, t: float) -> float:
        """Bound on |c(t) - X0 - c0 (t - T0)| of the form M A^2 (t - T0)^2 / gamma"""
        if self.gamma <= 0.0:
            raise PreconditionError("deviation bound needs a positive strength")
        tau = self.elapsed(t)
        m = max(self.left.rho, self.right.rho)
        if self.kind == SdwKind.RIGHT_VACUUM:
            amplitude = abs(self.left.u - self.c0)
        elif self.kind == SdwKind.LEFT_VACUUM:
            amplitude = abs(self.c0 - self.right.u)
        else:
            amplitude = abs(self.left.u - self.right.u)
        return m * amplitude ** 2 * tau * tau / self.gamma

    def speed_bounds(self, t: float) -> Tuple[float, float]:
        """Range of u_s over [t, infinity)"""
        current = self.speed(max(t, self.birth_time))
        limit = self.limit_speed
        return min(current, limit), max(current, limit)


def simple_wave(left: FluidState, right: FluidState, position: float, time: float,
                with_energy: bool = False) -> SdwTrajectory:
    """Zero-strength shadow wave of a Riemann problem with u_l > u_r"""
    if left.u <= right.u:
        raise PreconditionError("a simple shadow wave needs u_l > u_r")
    y = intermediate_speed(left, right)
    e_s0 = None
    if with_energy:
        # xi e_s grows linearly at t=0+, which pins e_s0
        flux_in = y * (right.energy - left.energy) - (right.u * right.energy - left.u * left.energy)
        e_s0 = max(flux_in / strength_rate(left, right) - 0.5 * y * y, 0.0)
    return SdwTrajectory(birth_time=time, birth_position=position, gamma=0.0, c0=y,
                         left=left, right=right, kind=SdwKind.BULK, e_s0=e_s0)


class FrontCurve:
    """Path x = c(t) of a shadow wave or of a straight line, with a small position cache"""

    def __init__(self, trajectory: Optional[SdwTrajectory] = None, *, anchor: float = 0.0,
                 birth_time: float = 0.0, line_speed: float = 0.0):
        self.trajectory = trajectory
        if trajectory is not None:
            anchor, birth_time = trajectory.birth_position, trajectory.birth_time
        self.anchor = anchor
        self.birth_time = birth_time
        self.line_speed = line_speed
        self._positions: Dict[float, float] = {}

    @classmethod
    def straight(cls, anchor: float, birth_time: float, speed: float) -> "FrontCurve":
        return cls(anchor=anchor, birth_time=birth_time, line_speed=speed)

    @property
    def is_straight(self) -> bool:
        return self.trajectory is None

    def position(self, t: float) -> float:
        cached = self._positions.get(t)
        if cached is not None:
            return cached
        if self.trajectory is not None:
            x = self.trajectory.position(t)
        else:
            x = self.anchor + self.line_speed * (t - self.birth_time)
        if len(self._positions) >= POSITION_CACHE_SIZE:
            self._positions.clear()
        self._positions[t] = x
        return x

    def speed(self, t: float) -> float:
        if self.trajectory is not None:
            return self.trajectory.speed(t)
        return self.line_speed

    def strength(self, t: float) -> float:
        if self.trajectory is not None:
            return self.trajectory.strength(t)
        return 0.0

    @property
    def limit_speed(self) -> float:
        if self.trajectory is not None:
            return self.trajectory.limit_speed
        return self.line_speed

    def speed_bounds(self, t: float) -> Tuple[float, float]:
        if self.trajectory is not None:
            return self.trajectory.speed_bounds(t)
        return self.line_speed, self.line_speed


@dataclass(eq=False)
class WaveFront:
    """A front of the fan: contact, shadow wave or vacuum fan edge"""
    front_id: int
    kind: FrontKind
    left: FluidState
    right: FluidState
    curve: FrontCurve
    parents: Tuple[int, ...] = ()
    death_time: Optional[float] = None
    tags: Dict[str, str] = field(default_factory=dict)

    @property
    def trajectory(self) -> Optional[SdwTrajectory]:
        return self.curve.trajectory

    @property
    def birth_time(self) -> float:
        return self.curve.birth_time

    @property
    def birth_position(self) -> float:
        return self.curve.anchor

    @property
    def is_shadow(self) -> bool:
        return self.kind == FrontKind.SHADOW

    def position(self, t: float) -> float:
        return self.curve.position(t)

    def speed(self, t: float) -> float:
        return self.curve.speed(t)

    def strength(self, t: float) -> float:
        return self.curve.strength(t)

    def momentum(self, t: float) -> float:
        return self.strength(t) * self.speed(t)

    def energy_component(self, t: float) -> float:
        if self.trajectory is None:
            return 0.0
        return self.trajectory.energy_component(t)

    def is_alive(self, t: float, before: bool = False) -> bool:
        """Alive on [birth, death); with before=True on (birth, death]"""
        if before:
            born = self.birth_time < t or (self.birth_time == 0.0 and t == 0.0)
            return born and (self.death_time is None or t <= self.death_time)
        return self.birth_time <= t and (self.death_time is None or t < self.death_time)


def contact_front(front_id: int, left: FluidState, right: FluidState, anchor: float,
                  birth_time: float = 0.0, kind: FrontKind = FrontKind.CONTACT,
                  speed: Optional[float] = None) -> WaveFront:
    """Straight front moving with the common velocity of its non-vacuum side"""
    if speed is None:
        speed = right.u if left.is_vacuum else left.u
    return WaveFront(front_id=front_id, kind=kind, left=left, right=right,
                     curve=FrontCurve.straight(anchor, birth_time, speed))


def shadow_front(front_id: int, trajectory: SdwTrajectory, parents: Tuple[int, ...] = ()) -> WaveFront:
    return WaveFront(front_id=front_id, kind=FrontKind.SHADOW, left=trajectory.left,
                     right=trajectory.right, curve=FrontCurve(trajectory), parents=parents)
