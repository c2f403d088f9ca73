"""
Wave Interactions for the front tracker
Finds the next crossing of two neighboring fronts and merges colliding fronts into one shadow wave
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence, Tuple

from scipy.optimize import brentq

from fluid_states import FluidState
from shadow_waves import FrontCurve, SdwKind, SdwTrajectory, WaveFront, simple_wave
from sdwtrack_errors import InvariantError, PreconditionError

logger = logging.getLogger(__name__)

MAX_SEARCH_STEPS = 20000


class InteractionKind(str, Enum):
    """Outcome class of a collision, fixed by the outermost states"""
    A1 = "A1"  # right outer state is vacuum
    A2 = "A2"  # both outer states carry mass
    A3 = "A3"  # left outer state is vacuum
    A4 = "A4"  # both outer states are vacuum


OUTCOME_KIND = {
    InteractionKind.A1: SdwKind.RIGHT_VACUUM,
    InteractionKind.A2: SdwKind.BULK,
    InteractionKind.A3: SdwKind.LEFT_VACUUM,
    InteractionKind.A4: SdwKind.DOUBLE_VACUUM,
}


def classify_interaction(left: FluidState, right: FluidState) -> InteractionKind:
    if left.is_vacuum and right.is_vacuum:
        return InteractionKind.A4
    if left.is_vacuum:
        return InteractionKind.A3
    if right.is_vacuum:
        return InteractionKind.A1
    return InteractionKind.A2


@dataclass(frozen=True, order=True)
class Crossing:
    """Scheduled meeting of two neighboring fronts"""
    time: float
    position: float
    sequence: int
    left_id: int = field(compare=False)
    right_id: int = field(compare=False)


@dataclass
class InteractionEvent:
    """A resolved (or about to be resolved) collision of adjacent fronts"""
    time: float
    position: float
    participants: Tuple[int, ...]
    outcome_kind: InteractionKind
    incoming_strengths: Tuple[float, ...] = ()
    incoming_speeds: Tuple[float, ...] = ()
    outgoing_id: Optional[int] = None
    gamma: float = 0.0
    c0: float = 0.0


def next_crossing(left_front: FrontCurve, right_front: FrontCurve, t_now: float,
                  horizon: float, root_xtol: float = 1e-12,
                  ordering_tol: float = 1e-9) -> Optional[Tuple[float, float]]:
    """Earliest t in [t_now, horizon] with c_l(t) = c_r(t), or None"""
    t = max(t_now, left_front.birth_time, right_front.birth_time)
    if t > horizon:
        return None

    def gap(s: float) -> float:
        return right_front.position(s) - left_front.position(s)

    def refine(a: float, b: float) -> Tuple[float, float]:
        if gap(a) <= 0.0:
            root = a
        else:
            root = brentq(gap, a, b, xtol=root_xtol * (1.0 + abs(a)), rtol=1e-14)
        return root, 0.5 * (left_front.position(root) + right_front.position(root))

    g = gap(t)
    x_tol = ordering_tol * (1.0 + abs(left_front.position(t)))
    if g < -x_tol:
        raise InvariantError(f"front ordering violated at t={t}: gap {g}")
    closing_now = left_front.speed(t) - right_front.speed(t)
    if g <= x_tol and closing_now > 0.0:
        return t, 0.5 * (left_front.position(t) + right_front.position(t))

    h_min = 1e-12 * (1.0 + abs(t))
    for _ in range(MAX_SEARCH_STEPS):
        _, fastest_left = left_front.speed_bounds(t)
        slowest_right, _ = right_front.speed_bounds(t)
        closing_bound = fastest_left - slowest_right
        if closing_bound <= 0.0 or t >= horizon:
            return None
        g = max(g, 0.0)
        safe = g / closing_bound
        closing_now = left_front.speed(t) - right_front.speed(t)
        if closing_now > 0.0:
            # overshoot guess for a bracket near the root
            t_try = min(t + 2.0 * g / closing_now, horizon)
            if t_try > t + safe and gap(t_try) <= 0.0:
                return refine(t, t_try)
        t_next = min(t + max(safe, h_min), horizon)
        g_next = gap(t_next)
        if g_next <= 0.0:
            return refine(t, t_next)
        t, g = t_next, g_next
    logger.warning(f"Crossing search gave up after {MAX_SEARCH_STEPS} steps at t={t}")
    return None


def resolve(participants: Sequence[WaveFront], T: float, X: float,
            with_energy: bool = False, tol: float = 1e-9) -> SdwTrajectory:
    """Merge adjacent fronts meeting at (X, T) into one shadow wave"""
    if len(participants) < 2:
        raise PreconditionError("an interaction needs at least two fronts")
    for a, b in zip(participants, participants[1:]):
        if a.right != b.left:
            raise InvariantError(f"fronts {a.front_id} and {b.front_id} are not adjacent")
    strengths = [p.strength(T) for p in participants]
    speeds = [p.speed(T) for p in participants]
    left, right = participants[0].left, participants[-1].right
    kind = classify_interaction(left, right)
    gamma = math.fsum(strengths)

    if gamma <= 0.0:
        if left.is_vacuum or right.is_vacuum or left.u <= right.u:
            raise InvariantError(f"no admissible shadow wave from zero-strength cluster at t={T}")
        return simple_wave(left, right, X, T, with_energy=with_energy)

    c0 = math.fsum(xi * u for xi, u in zip(strengths, speeds)) / gamma
    slack = tol * (1.0 + abs(c0))
    if not left.is_vacuum and c0 > left.u:
        if c0 > left.u + slack:
            raise InvariantError(f"merged speed {c0} exceeds u_l={left.u} at t={T}")
        c0 = left.u
    if not right.is_vacuum and c0 < right.u:
        if c0 < right.u - slack:
            raise InvariantError(f"merged speed {c0} is below u_r={right.u} at t={T}")
        c0 = right.u

    e_s0 = None
    if with_energy:
        carried = math.fsum(
            xi * (p.energy_component(T) + 0.5 * u * u)
            for p, xi, u in zip(participants, strengths, speeds) if xi > 0.0
        )
        e_s0 = max((carried - 0.5 * gamma * c0 * c0) / gamma, 0.0)

    return SdwTrajectory(birth_time=T, birth_position=X, gamma=gamma, c0=c0,
                         left=left, right=right, kind=OUTCOME_KIND[kind], e_s0=e_s0)


def cluster_events(queue_head: Crossing, pending: Mapping[int, Crossing], tol_cluster: float,
                   fronts: Mapping[int, WaveFront]) -> InteractionEvent:
    """Grow the head crossing into the chain of adjacent fronts meeting at the same point"""
    x_tol = tol_cluster * (1.0 + abs(queue_head.position))

    def simultaneous(c: Optional[Crossing]) -> bool:
        return (c is not None
                and abs(c.time - queue_head.time) <= tol_cluster
                and abs(c.position - queue_head.position) <= x_tol)

    chain = [queue_head.left_id, queue_head.right_id]
    by_right = {c.right_id: c for c in pending.values()}

    following = pending.get(chain[-1])
    while simultaneous(following) and following.right_id not in chain:
        chain.append(following.right_id)
        following = pending.get(chain[-1])

    preceding = by_right.get(chain[0])
    while simultaneous(preceding) and preceding.left_id not in chain:
        chain.insert(0, preceding.left_id)
        preceding = by_right.get(chain[0])

    if len(chain) > 2:
        logger.debug(f"Clustered {len(chain)} fronts at t={queue_head.time:.12g}")
    kind = classify_interaction(fronts[chain[0]].left, fronts[chain[-1]].right)
    return InteractionEvent(time=queue_head.time, position=queue_head.position,
                            participants=tuple(chain), outcome_kind=kind)
