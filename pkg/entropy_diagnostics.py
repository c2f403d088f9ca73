"""
Entropy Diagnostics for the shadow-wave fan
Entropy production across shadow waves, jumps at interactions and total entropy over a window
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from fluid_states import FluidState
from front_tracker import WaveFan
from sdwtrack_errors import PreconditionError
from shadow_waves import SdwTrajectory, WaveFront

logger = logging.getLogger(__name__)


class FanCrossing(str, Enum):
    """Shadow wave entering or leaving a vacuum fan"""
    ENTER_FAN = "enter_fan"
    EXIT_FAN = "exit_fan"


@dataclass(frozen=True)
class EntropyPair:
    """Entropy density with its flux and the contribution of an atom"""
    name: str
    density: Callable[[FluidState], float]
    atom: Callable[[float, float, float], float]

    def flux(self, state: FluidState) -> float:
        # pressureless: every entropy of the form rho g(u, e) is transported with u
        return state.u * self.density(state)


def _kinetic_density(state: FluidState) -> float:
    return 0.5 * state.rho * state.u * state.u


def _kinetic_atom(xi: float, u_s: float, e_s: float) -> float:
    return 0.5 * xi * u_s * u_s


KINETIC_ENERGY = EntropyPair(name="kinetic_energy", density=_kinetic_density, atom=_kinetic_atom)


def semi_convex_pair(R: Callable[[float], float] = lambda u: u * u,
                     S: Callable[[float], float] = lambda e: -e,
                     name: str = "semi_convex") -> EntropyPair:
    """eta = rho (R(u) + S(e)) for the 3x3 system"""

    def density(state: FluidState) -> float:
        if state.is_vacuum:
            return 0.0
        return state.rho * (R(state.u) + S(state.e or 0.0))

    def atom(xi: float, u_s: float, e_s: float) -> float:
        return xi * (R(u_s) + S(e_s))

    return EntropyPair(name=name, density=density, atom=atom)


INTERNAL_ENERGY = semi_convex_pair(R=lambda u: 0.0, S=lambda e: -e, name="internal_energy")


def production(traj: SdwTrajectory, t: float) -> float:
    """Energy production -(rho_l (u_l - u_s)^3 + rho_r (u_s - u_r)^3)/2 across a shadow wave"""
    u_s = traj.speed(t)
    total = 0.0
    if not traj.left.is_vacuum:
        total += traj.left.rho * (traj.left.u - u_s) ** 3
    if not traj.right.is_vacuum:
        total += traj.right.rho * (u_s - traj.right.u) ** 3
    return -0.5 * total


def front_production(front: WaveFront, t: float) -> float:
    if front.trajectory is None:
        return 0.0
    return production(front.trajectory, t)


def entropy_drop_at_merge(xi_l: float, u_l: float, xi_r: float, u_r: float) -> float:
    """Jump of the total entropy when two atoms merge"""
    if xi_l + xi_r <= 0.0:
        raise PreconditionError("at least one merging wave needs a positive strength")
    return -0.5 * xi_l * xi_r * (u_l - u_r) ** 2 / (xi_l + xi_r)


def merge_entropy_jump(strengths: Sequence[float], speeds: Sequence[float]) -> float:
    """Entropy jump of an m-wave merge, minus half the strength-weighted variance of the speeds"""
    gamma = math.fsum(strengths)
    if gamma <= 0.0:
        return 0.0
    c0 = math.fsum(xi * u for xi, u in zip(strengths, speeds)) / gamma
    return -0.5 * math.fsum(xi * (u - c0) ** 2 for xi, u in zip(strengths, speeds))


def delta_D_sdw_cd(kind: FanCrossing, rho: float, u: float, u_s: float) -> float:
    """Jump of the production rate when a shadow wave enters or leaves a vacuum fan"""
    if kind == FanCrossing.ENTER_FAN:
        return 0.5 * rho * (u_s - u) ** 3
    return -0.5 * rho * (u_s - u) ** 3


def auto_window(fan: WaveFan, t_end: float) -> float:
    """Half-width M of a symmetric window that contains every front up to t_end"""
    points = fan.partition.points
    reach = max(abs(points[0]), abs(points[-1]))
    return reach + fan.max_speed() * t_end + 1.0


def total_entropy(fan: WaveFan, t: float, M: float, pair: EntropyPair = KINETIC_ENERGY,
                  before: bool = False) -> float:
    """Integral of eta over [-M, M] plus the atom terms"""
    fronts, states = fan.states_at(t, before=before)
    positions = [f.position(t) for f in fronts]
    if positions and (positions[0] < -M or positions[-1] > M):
        raise PreconditionError(f"window [-{M}, {M}] does not contain every front at t={t}")
    edges = [-M] + positions + [M]
    pieces = math.fsum(pair.density(s) * (b - a) for s, a, b in zip(states, edges, edges[1:]))
    atoms = 0.0
    for f in fronts:
        if f.is_shadow:
            e_s = f.energy_component(t) if fan.with_energy else 0.0
            atoms += pair.atom(f.strength(t), f.speed(t), e_s)
    return pieces + atoms


def boundary_flux(fan: WaveFan, pair: EntropyPair = KINETIC_ENERGY) -> float:
    """Net inflow rate q(U_left) - q(U_right) through the window boundary"""
    return pair.flux(fan.left_state) - pair.flux(fan.right_state)


def production_rate_identity(fan: WaveFan, t: float, M: float, pair: EntropyPair = KINETIC_ENERGY,
                             h: float = 1e-5) -> float:
    """dE/dt - (sum of productions + boundary inflow), by central differences"""
    rate = (total_entropy(fan, t + h, M, pair) - total_entropy(fan, t - h, M, pair)) / (2.0 * h)
    produced = math.fsum(front_production(f, t) for f in fan.fronts_at(t))
    return rate - (produced + boundary_flux(fan, pair))


@dataclass
class EventEntropy:
    """Entropy bookkeeping for one interaction"""
    time: float
    participants: Tuple[int, ...]
    outcome_kind: str
    delta_D: float
    delta_E: float
    measured_delta_E: float


@dataclass
class EntropyReport:
    """Production curves, event ledger and total entropy trace of a run"""
    window: float
    pair: str
    front_production: Dict[int, List[Tuple[float, float]]] = field(default_factory=dict)
    events: List[EventEntropy] = field(default_factory=list)
    total_entropy: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def event_drops(self) -> List[Tuple[float, float]]:
        return [(e.time, e.delta_E) for e in self.events]


def entropy_report(fan: WaveFan, times: Sequence[float], M: Optional[float] = None,
                   pair: EntropyPair = KINETIC_ENERGY) -> EntropyReport:
    """Sample production and total entropy at the given times and audit every event"""
    M = auto_window(fan, max(times, default=fan.t_now)) if M is None else M
    report = EntropyReport(window=M, pair=pair.name)
    for t in times:
        report.total_entropy.append((t, total_entropy(fan, t, M, pair)))
        for f in fan.fronts_at(t):
            if f.is_shadow:
                report.front_production.setdefault(f.front_id, []).append((t, front_production(f, t)))

    for event in fan.history:
        T = event.time
        participants = [fan.registry[i] for i in event.participants]
        outgoing = fan.registry[event.outgoing_id]
        delta_D = front_production(outgoing, T) - math.fsum(front_production(p, T) for p in participants)
        measured = (total_entropy(fan, T, M, pair, before=False)
                    - total_entropy(fan, T, M, pair, before=True))
        report.events.append(EventEntropy(
            time=T,
            participants=event.participants,
            outcome_kind=event.outcome_kind.value,
            delta_D=delta_D,
            delta_E=merge_entropy_jump(event.incoming_strengths, event.incoming_speeds),
            measured_delta_E=measured,
        ))
    logger.info(f"Entropy report: {len(report.events)} events, window M={M:.6g}")
    return report
