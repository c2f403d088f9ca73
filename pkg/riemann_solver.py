"""
Riemann Solver for pressureless gas dynamics
Contact discontinuities, vacuum fans and simple shadow waves between two constant states
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from fluid_states import FluidState, VacuumFan
from sdwtrack_errors import PreconditionError

logger = logging.getLogger(__name__)

EQUAL_DENSITY_RTOL = 1e-12


class RiemannKind(str, Enum):
    """Elementary wave produced by a Riemann problem"""
    CONTACT = "contact"
    VACUUM_FAN = "vacuum_fan"
    SIMPLE_SDW = "simple_sdw"


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar solution of a Riemann problem"""
    kind: RiemannKind
    left: FluidState
    right: FluidState
    speed: Optional[float] = None
    fan_edges: Optional[Tuple[float, float]] = None
    strength_rate: float = 0.0

    @property
    def is_zero_jump(self) -> bool:
        """Identical neighbor states, nothing to propagate"""
        return (self.left.rho, self.left.u, self.left.e) == (self.right.rho, self.right.u, self.right.e)

    def strength(self, t: float) -> float:
        return self.strength_rate * t


def equal_densities(rho_l: float, rho_r: float, rtol: float = EQUAL_DENSITY_RTOL) -> bool:
    return abs(rho_l - rho_r) <= rtol * max(rho_l, rho_r)


def intermediate_speed(left: FluidState, right: FluidState) -> float:
    """Square-root weighted mean velocity y of two states"""
    s, q = math.sqrt(left.rho), math.sqrt(right.rho)
    if s + q == 0.0:
        raise PreconditionError("intermediate speed is undefined between two vacuum states")
    if equal_densities(left.rho, right.rho):
        return 0.5 * (left.u + right.u)
    return (s * left.u + q * right.u) / (s + q)


def focus_speed(left: FluidState, right: FluidState) -> float:
    """Second root z of the shadow-wave speed equation; only exists for unequal densities"""
    if equal_densities(left.rho, right.rho):
        raise PreconditionError("focus speed is undefined for equal densities")
    s, q = math.sqrt(left.rho), math.sqrt(right.rho)
    return (s * left.u - q * right.u) / (s - q)


def strength_rate(left: FluidState, right: FluidState) -> float:
    if equal_densities(left.rho, right.rho):
        return left.rho * (left.u - right.u)
    return math.sqrt(left.rho * right.rho) * (left.u - right.u)


def solve_riemann(left: FluidState, right: FluidState) -> RiemannSolution:
    """Solve the Riemann problem between two non-vacuum states"""
    if left.rho <= 0.0 or right.rho <= 0.0:
        raise PreconditionError(f"Riemann data need positive densities, got {left.rho} and {right.rho}")
    if left.u == right.u:
        return RiemannSolution(kind=RiemannKind.CONTACT, left=left, right=right, speed=left.u)
    if left.u < right.u:
        return RiemannSolution(kind=RiemannKind.VACUUM_FAN, left=left, right=right,
                               fan_edges=(left.u, right.u))
    y = intermediate_speed(left, right)
    return RiemannSolution(kind=RiemannKind.SIMPLE_SDW, left=left, right=right,
                           speed=y, strength_rate=strength_rate(left, right))


def vacuum_velocity(fan: RiemannSolution, x: float, t: float, anchor: float) -> float:
    """Velocity inside a vacuum fan opened at anchor"""
    if fan.kind != RiemannKind.VACUUM_FAN:
        raise PreconditionError(f"vacuum velocity needs a vacuum fan, got {fan.kind.value}")
    if t <= 0.0:
        raise PreconditionError(f"vacuum velocity needs t > 0, got {t}")
    u_left, u_right = fan.fan_edges
    return VacuumFan(anchor=anchor, u_left=u_left, u_right=u_right).velocity(x, t)


def rankine_hugoniot_residual(solution: RiemannSolution) -> Tuple[float, float]:
    """Defect of the mass and momentum balance for a straight wave of speed y and rate xi'"""
    if solution.kind == RiemannKind.VACUUM_FAN:
        return 0.0, 0.0
    left, right = solution.left, solution.right
    y = solution.speed
    jump_rho = right.rho - left.rho
    jump_q = right.momentum - left.momentum
    jump_q2 = right.rho * right.u ** 2 - left.rho * left.u ** 2
    rate = solution.strength_rate
    return rate - (y * jump_rho - jump_q), y * rate - (y * jump_q - jump_q2)
