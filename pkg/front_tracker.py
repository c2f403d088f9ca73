"""
Front Tracker for pressureless gas dynamics
Builds the initial wave fan from Riemann solutions and runs the interaction event loop
"""

import heapq
import itertools
import logging
from typing import Dict, List, Optional, Tuple

from fluid_states import FluidState, Partition, SampledStates, VacuumFan
from riemann_solver import RiemannKind, solve_riemann
from sdwtrack_config import ToleranceConfig, default_tolerances
from sdwtrack_errors import InvariantError, PreconditionError
from shadow_waves import FrontKind, WaveFront, contact_front, shadow_front, simple_wave
from wave_interactions import Crossing, InteractionEvent, cluster_events, next_crossing, resolve

logger = logging.getLogger(__name__)


class WaveFan:
    """Ordered states and fronts of the approximate solution"""

    def __init__(self, samples: SampledStates, tolerances: Optional[ToleranceConfig] = None,
                 with_energy: bool = False):
        self.samples = samples
        self.partition: Partition = samples.partition
        self.tolerances = tolerances or default_tolerances
        self.with_energy = with_energy
        self.fronts: List[WaveFront] = []
        self.states: List[FluidState] = [samples.states[0]]
        self.state_indices: List[Optional[int]] = [0]
        self.registry: Dict[int, WaveFront] = {}
        self.history: List[InteractionEvent] = []
        self.root_ids: Tuple[int, ...] = ()
        self.t_now = 0.0
        self.horizon = 0.0
        self._queue: List[Crossing] = []
        self._scheduled: Dict[int, Crossing] = {}
        self._sequence = itertools.count()
        self._ids = itertools.count()

    @property
    def index_set(self) -> Tuple[int, ...]:
        """Indices of the initial states still present in the fan"""
        return tuple(i for i in self.state_indices if i is not None)

    @property
    def left_state(self) -> FluidState:
        return self.states[0]

    @property
    def right_state(self) -> FluidState:
        return self.states[-1]

    def pending_events(self) -> int:
        return len(self._scheduled)

    def _add_front(self, front: WaveFront, right: FluidState, index: Optional[int]) -> None:
        self.fronts.append(front)
        self.registry[front.front_id] = front
        self.states.append(right)
        self.state_indices.append(index)

    def _populate(self) -> None:
        states = self.samples.states
        points = self.partition.points
        for i in range(len(states) - 1):
            left, right, anchor = self.states[-1], states[i + 1], points[i]
            solution = solve_riemann(left, right)
            if solution.is_zero_jump:
                continue
            created = []
            if solution.kind == RiemannKind.CONTACT:
                front = contact_front(next(self._ids), left, right, anchor)
                self._add_front(front, right, i + 1)
                created.append(front.front_id)
            elif solution.kind == RiemannKind.VACUUM_FAN:
                vacuum = FluidState(rho=0.0, u=left.u, e=0.0 if self.with_energy else None,
                                    fan=VacuumFan(anchor=anchor, u_left=left.u, u_right=right.u))
                left_edge = contact_front(next(self._ids), left, vacuum, anchor,
                                          kind=FrontKind.FAN_EDGE, speed=left.u)
                self._add_front(left_edge, vacuum, None)
                right_edge = contact_front(next(self._ids), vacuum, right, anchor,
                                           kind=FrontKind.FAN_EDGE, speed=right.u)
                self._add_front(right_edge, right, i + 1)
                created.append(right_edge.front_id)
            else:
                trajectory = simple_wave(left, right, anchor, 0.0, with_energy=self.with_energy)
                front = shadow_front(next(self._ids), trajectory)
                self._add_front(front, right, i + 1)
                created.append(front.front_id)
            if i == 0:
                self.root_ids = tuple(created)

    # Event queue

    def _schedule(self, left: WaveFront, right: WaveFront) -> None:
        tol = self.tolerances
        found = next_crossing(left.curve, right.curve, self.t_now, self.horizon,
                              root_xtol=tol.root_xtol, ordering_tol=tol.ordering_tol)
        if found is None:
            self._scheduled.pop(left.front_id, None)
            return
        time, position = found
        crossing = Crossing(time=time, position=position, sequence=next(self._sequence),
                            left_id=left.front_id, right_id=right.front_id)
        self._scheduled[left.front_id] = crossing
        heapq.heappush(self._queue, crossing)

    def _schedule_all(self) -> None:
        self._queue.clear()
        self._scheduled.clear()
        for left, right in zip(self.fronts, self.fronts[1:]):
            self._schedule(left, right)
        logger.debug(f"Scheduled {len(self._scheduled)} crossings up to t={self.horizon}")

    def _is_current(self, crossing: Crossing) -> bool:
        return self._scheduled.get(crossing.left_id) is crossing

    def _position_in_fan(self, front_id: int) -> int:
        for k, front in enumerate(self.fronts):
            if front.front_id == front_id:
                return k
        raise InvariantError(f"front {front_id} is not active")

    def _apply(self, event: InteractionEvent) -> WaveFront:
        tol = self.tolerances
        T = event.time
        if T < self.t_now - tol.tol_cluster:
            raise InvariantError(f"event time regression: {T} < {self.t_now}")
        start = self._position_in_fan(event.participants[0])
        count = len(event.participants)
        participants = self.fronts[start:start + count]
        if tuple(f.front_id for f in participants) != event.participants:
            raise InvariantError(f"participants {event.participants} are not adjacent")

        trajectory = resolve(participants, T, event.position, with_energy=self.with_energy,
                             tol=tol.overcompressive_tol)
        outgoing = shadow_front(next(self._ids), trajectory, parents=event.participants)
        event.incoming_strengths = tuple(p.strength(T) for p in participants)
        event.incoming_speeds = tuple(p.speed(T) for p in participants)
        event.outgoing_id = outgoing.front_id
        event.gamma = trajectory.gamma
        event.c0 = trajectory.c0

        for p in participants:
            p.death_time = T
            self._scheduled.pop(p.front_id, None)
        self.fronts[start:start + count] = [outgoing]
        del self.states[start + 1:start + count]
        del self.state_indices[start + 1:start + count]
        self.registry[outgoing.front_id] = outgoing
        self.history.append(event)
        self.t_now = max(self.t_now, T)
        self._check_neighbors(start)
        logger.debug(f"{event.outcome_kind.value} at t={T:.12g} x={event.position:.12g}: "
                     f"{count} fronts -> front {outgoing.front_id}")

        if start > 0:
            self._schedule(self.fronts[start - 1], outgoing)
        if start + 1 < len(self.fronts):
            self._schedule(outgoing, self.fronts[start + 1])
        return outgoing

    def _check_neighbors(self, k: int) -> None:
        t = self.t_now
        x = self.fronts[k].position(t)
        slack = self.tolerances.ordering_tol * (1.0 + abs(x))
        if k > 0 and self.fronts[k - 1].position(t) > x + slack:
            logger.error(f"Front {self.fronts[k - 1].front_id} passed front {self.fronts[k].front_id}")
            raise InvariantError(f"front ordering violated left of x={x} at t={t}")
        if k + 1 < len(self.fronts) and self.fronts[k + 1].position(t) < x - slack:
            logger.error(f"Front {self.fronts[k + 1].front_id} passed front {self.fronts[k].front_id}")
            raise InvariantError(f"front ordering violated right of x={x} at t={t}")

    def run_until(self, t_end: float) -> "WaveFan":
        """Resolve every interaction up to t_end"""
        if t_end < self.t_now - self.tolerances.tol_cluster:
            raise PreconditionError(f"t_end={t_end} precedes the current time {self.t_now}")
        if t_end > self.horizon:
            self.horizon = t_end
            self._schedule_all()
        while self._queue:
            head = self._queue[0]
            if not self._is_current(head):
                heapq.heappop(self._queue)
                continue
            if head.time > t_end:
                break
            heapq.heappop(self._queue)
            event = cluster_events(head, self._scheduled, self.tolerances.tol_cluster, self.registry)
            self._apply(event)
        self.t_now = max(self.t_now, t_end)
        return self

    # Read access for diagnostics

    def fronts_at(self, t: float, before: bool = False) -> List[WaveFront]:
        """Fronts alive at t, ordered left to right"""
        if t > self.t_now + self.tolerances.tol_cluster:
            raise PreconditionError(f"t={t} lies beyond the evolved time {self.t_now}")
        if t < 0.0:
            raise PreconditionError(f"t={t} is negative")
        alive = [f for f in self.registry.values() if f.is_alive(t, before=before)]
        alive.sort(key=lambda f: (f.position(t), f.front_id))
        # neighbors that are numerically tied may come out swapped; the state chain decides
        for _ in range(len(alive)):
            swapped = False
            for k in range(len(alive) - 1):
                a, b = alive[k], alive[k + 1]
                if a.right != b.left and b.right == a.left:
                    alive[k], alive[k + 1] = b, a
                    swapped = True
            if not swapped:
                break
        return alive

    def states_at(self, t: float, before: bool = False) -> Tuple[List[WaveFront], List[FluidState]]:
        fronts = self.fronts_at(t, before=before)
        if not fronts:
            return fronts, [self.states[0]]
        return fronts, [fronts[0].left] + [f.right for f in fronts]

    def zero_chain(self) -> List[WaveFront]:
        """Fronts descending from the wave born at (R, 0), in order of birth"""
        if not self.root_ids:
            return []
        children: Dict[int, WaveFront] = {}
        for front in self.registry.values():
            for parent in front.parents:
                children[parent] = front
        chain = [self.registry[self.root_ids[-1]]]
        while chain[-1].front_id in children:
            chain.append(children[chain[-1].front_id])
        return chain

    def max_speed(self) -> float:
        speeds = [abs(s.u) for s in self.samples.states]
        return max(speeds) if speeds else 0.0

    def window(self, t: Optional[float] = None) -> Tuple[float, float]:
        """Interval containing every front up to time t, padded by the maximal speed"""
        t = self.t_now if t is None else t
        pad = self.max_speed() * t + 1.0
        return self.partition.points[0] - pad, self.partition.points[-1] + pad


def initialize(samples: SampledStates, p: Optional[Partition] = None,
               tolerances: Optional[ToleranceConfig] = None, with_energy: bool = False) -> WaveFan:
    """Solve the Riemann problem at every partition point and build the initial fan"""
    if p is not None and p is not samples.partition and p != samples.partition:
        raise PreconditionError("samples were taken on a different partition")
    fan = WaveFan(samples, tolerances=tolerances, with_energy=with_energy)
    fan._populate()
    logger.info(f"Initialized fan with {len(fan.fronts)} fronts on {len(fan.partition)} points")
    return fan


def run_until(fan: WaveFan, t_end: float) -> WaveFan:
    return fan.run_until(t_end)


def count_fronts(fan: WaveFan) -> int:
    return len(fan.fronts)
