"""
Convergence Analysis for the front tracker
Measure snapshots, weak-form residuals, the classical characteristics oracle,
0-SDW curves and the refinement sweep that ties them together
"""

import asyncio
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from fluid_states import FluidState, InitialData, Partition, VacuumFan, build_partition, sample_states
from front_tracker import WaveFan, initialize
from sdwtrack_config import RunConfig, TestFunctionConfig
from sdwtrack_errors import InvariantError, PreconditionError
from shadow_waves import SdwTrajectory, kind_for

logger = logging.getLogger(__name__)

GAMMA_INTERIOR_SAMPLES = 32
BUMP_TABLE_CELLS = 4096
TIME_GAUSS_ORDER = 16
BOX_GAUSS_ORDER = 8


class Rendering(str, Enum):
    """How an atom enters the weak-form integrals"""
    ATOMS = "atoms"
    SHADOW = "shadow"


# Measure snapshots

@dataclass(frozen=True)
class Piece:
    """Constant state on [x_left, x_right]"""
    x_left: float
    x_right: float
    state: FluidState

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def mass(self) -> float:
        return self.state.rho * self.length

    @property
    def momentum(self) -> float:
        return self.state.momentum * self.length

    @property
    def energy(self) -> float:
        return self.state.energy * self.length


@dataclass(frozen=True)
class Atom:
    """Delta part of a shadow wave"""
    x: float
    mass: float
    momentum: float
    front_id: int
    energy: Optional[float] = None


@dataclass
class MeasureSnapshot:
    """Pieces tiling a window plus the atoms sitting on shadow fronts"""
    t: float
    pieces: List[Piece]
    atoms: List[Atom]

    @property
    def window(self) -> Tuple[float, float]:
        return self.pieces[0].x_left, self.pieces[-1].x_right

    @property
    def total_mass(self) -> float:
        return math.fsum([p.mass for p in self.pieces] + [a.mass for a in self.atoms])

    @property
    def total_momentum(self) -> float:
        return math.fsum([p.momentum for p in self.pieces] + [a.momentum for a in self.atoms])

    @property
    def total_energy(self) -> float:
        return math.fsum([p.energy for p in self.pieces] + [a.energy or 0.0 for a in self.atoms])

    def momentum_scale(self) -> float:
        return math.fsum([abs(p.momentum) for p in self.pieces] + [abs(a.momentum) for a in self.atoms])

    def piece_at(self, x: float) -> Piece:
        edges = [p.x_right for p in self.pieces]
        k = int(np.searchsorted(edges, x, side="left"))
        return self.pieces[min(k, len(self.pieces) - 1)]


def snapshot(fan: WaveFan, t: float, window: Optional[Tuple[float, float]] = None,
             before: bool = False) -> MeasureSnapshot:
    """Pieces and atoms of the tracked solution at time t"""
    fronts, states = fan.states_at(t, before=before)
    lo, hi = fan.window(t) if window is None else window
    positions = [f.position(t) for f in fronts]
    if positions and (positions[0] < lo or positions[-1] > hi):
        raise PreconditionError(f"window [{lo}, {hi}] does not contain every front at t={t}")
    edges = [lo] + positions + [hi]
    pieces = [Piece(x_left=a, x_right=b, state=s) for s, a, b in zip(states, edges, edges[1:])]
    atoms = []
    for f, x in zip(fronts, positions):
        if not f.is_shadow:
            continue
        xi, u_s = f.strength(t), f.speed(t)
        energy = None
        if fan.with_energy:
            energy = xi * (0.5 * u_s * u_s + f.energy_component(t))
        atoms.append(Atom(x=x, mass=xi, momentum=xi * u_s, front_id=f.front_id, energy=energy))
    return MeasureSnapshot(t=t, pieces=pieces, atoms=atoms)


# Closed-form oracle

def ode_trajectories(trajs: Sequence[SdwTrajectory], times: Sequence[float], rtol: float = 1e-12,
                     atol: float = 1e-14) -> np.ndarray:
    """Integrate the mass and momentum balance of many shadow waves in one system

    All waves must share their birth time. Returns an array of shape
    (len(trajs), len(times), 3) holding (xi, u_s, c).
    """
    if not trajs:
        return np.zeros((0, len(times), 3))
    t0 = trajs[0].birth_time
    if any(tr.birth_time != t0 for tr in trajs):
        raise PreconditionError("batched balance ODE needs a common birth time")
    if any(tr.gamma <= 0.0 for tr in trajs):
        raise PreconditionError("the balance ODE needs a positive initial strength")
    n = len(trajs)
    rho_l = np.array([tr.left.rho for tr in trajs])
    u_l = np.array([tr.left.u for tr in trajs])
    rho_r = np.array([tr.right.rho for tr in trajs])
    u_r = np.array([tr.right.u for tr in trajs])

    def rhs(t, y):
        xi, p = y[:n], y[n:2 * n]
        u_s = p / xi
        inflow_l = rho_l * (u_l - u_s)
        inflow_r = rho_r * (u_s - u_r)
        return np.concatenate([inflow_l + inflow_r, inflow_l * u_l + inflow_r * u_r, u_s])

    gamma = np.array([tr.gamma for tr in trajs])
    start = np.concatenate([gamma, gamma * np.array([tr.c0 for tr in trajs]),
                            np.array([tr.birth_position for tr in trajs])])
    times = sorted(times)
    solution = solve_ivp(rhs, (t0, max(times[-1], t0)), start, method="DOP853", t_eval=times,
                         rtol=rtol, atol=atol)
    if not solution.success:
        raise InvariantError(f"balance ODE failed: {solution.message}")
    xi, p, c = solution.y[:n], solution.y[n:2 * n], solution.y[2 * n:]
    return np.stack([xi, p / xi, c], axis=-1)


def ode_trajectory(traj: SdwTrajectory, times: Sequence[float], rtol: float = 1e-12,
                   atol: float = 1e-14) -> np.ndarray:
    """Rows (xi, u_s, c) of one shadow wave at the given times"""
    return ode_trajectories([traj], times, rtol, atol)[0]


def closed_form_errors(trajs: Sequence[SdwTrajectory], times: Sequence[float]) -> np.ndarray:
    """Largest relative gap between the closed forms and the balance ODE, per wave"""
    times = sorted(times)
    oracle = ode_trajectories(trajs, times)
    closed = np.array([[(tr.strength(t), tr.speed(t), tr.position(t)) for t in times] for tr in trajs])
    closed = closed.reshape(oracle.shape)
    xi, u_s, c = oracle[..., 0], oracle[..., 1], oracle[..., 2]
    gaps = np.stack([
        np.abs(closed[..., 0] - xi) / np.maximum(np.abs(xi), 1e-300),
        np.abs(closed[..., 1] - u_s) / (1.0 + np.abs(u_s)),
        np.abs(closed[..., 2] - c) / (1.0 + np.abs(c)),
    ])
    return gaps.max(axis=(0, 2))


def closed_form_error(traj: SdwTrajectory, times: Sequence[float]) -> float:
    return float(closed_form_errors([traj], times)[0])


def random_trajectory(rng: np.random.Generator) -> SdwTrajectory:
    """Admissible shadow wave with random states, strength and speed"""
    rho_l, rho_r = rng.uniform(0.1, 5.0, size=2)
    u_r = rng.uniform(-3.0, 3.0)
    u_l = u_r + rng.uniform(0.01, 5.0)
    left, right = FluidState(rho=float(rho_l), u=float(u_l)), FluidState(rho=float(rho_r), u=float(u_r))
    c0 = float(rng.uniform(u_r, u_l))
    return SdwTrajectory(birth_time=0.0, birth_position=float(rng.uniform(-1.0, 1.0)),
                         gamma=float(rng.uniform(0.01, 5.0)), c0=c0, left=left, right=right,
                         kind=kind_for(left, right))


def oracle_sweep(count: int, seed: int = 0, t_end: float = 5.0, samples: int = 11,
                 batch: int = 2500) -> float:
    """Max relative error of the closed forms over random admissible draws"""
    rng = np.random.default_rng(seed)
    times = list(np.linspace(0.0, t_end, samples))
    draws = [random_trajectory(rng) for _ in range(count)]
    # waves with similar time scales share a batch and its step sizes
    draws.sort(key=lambda tr: tr.gamma / ((tr.left.rho + tr.right.rho) * (tr.left.u - tr.right.u)))
    worst = 0.0
    for start in range(0, count, batch):
        errors = closed_form_errors(draws[start:start + batch], times)
        worst = max(worst, float(errors.max(initial=0.0)))
    logger.info(f"Closed-form sweep over {count} draws: max relative error {worst:.3e}")
    return worst


# Test functions

def _bump(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si * si))
    return out


def _bump_derivative(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    w = 1.0 - si * si
    out[inside] = np.exp(-1.0 / w) * (-2.0 * si / (w * w))
    return out


@lru_cache(maxsize=None)
def _gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


@lru_cache(maxsize=1)
def _bump_antiderivative() -> CubicHermiteSpline:
    """Hermite table of the integral of the bump from -1, with Gauss-Legendre cell integrals"""
    nodes = np.linspace(-1.0, 1.0, BUMP_TABLE_CELLS + 1)
    g, w = _gauss_rule(12)
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    half = 0.5 * np.diff(nodes)
    cells = half * (_bump(mid[:, None] + half[:, None] * g[None, :]) @ w)
    values = np.concatenate([[0.0], np.cumsum(cells)])
    return CubicHermiteSpline(nodes, values, _bump(nodes))


@dataclass(frozen=True)
class TestFunction:
    """Tensor bump phi(x, t) = b((x - cx)/rx) b((t - ct)/rt) with b(s) = exp(-1/(1 - s^2))"""
    __test__ = False

    center_x: float
    center_t: float
    radius_x: float
    radius_t: float

    def __post_init__(self):
        if self.radius_x <= 0.0 or self.radius_t <= 0.0:
            raise PreconditionError("test function radii must be positive")

    @classmethod
    def from_config(cls, config: TestFunctionConfig) -> "TestFunction":
        return cls(center_x=config.center_x, center_t=config.center_t,
                   radius_x=config.radius_x, radius_t=config.radius_t)

    @classmethod
    def inside(cls, x_lo: float, x_hi: float, t_lo: float, t_hi: float,
               shrink: float = 0.8) -> "TestFunction":
        """Bump supported in the shrunken rectangle [x_lo, x_hi] x [t_lo, t_hi]"""
        return cls(center_x=0.5 * (x_lo + x_hi), center_t=0.5 * (t_lo + t_hi),
                   radius_x=0.5 * shrink * (x_hi - x_lo), radius_t=0.5 * shrink * (t_hi - t_lo))

    @property
    def t_support(self) -> Tuple[float, float]:
        return self.center_t - self.radius_t, self.center_t + self.radius_t

    @property
    def x_support(self) -> Tuple[float, float]:
        return self.center_x - self.radius_x, self.center_x + self.radius_x

    def _sx(self, x: float) -> float:
        return (x - self.center_x) / self.radius_x

    def _st(self, t: float) -> float:
        return (t - self.center_t) / self.radius_t

    def x_factor(self, x: float) -> float:
        return float(_bump(self._sx(x)))

    def x_factor_derivative(self, x: float) -> float:
        return float(_bump_derivative(self._sx(x))) / self.radius_x

    def x_integral(self, a: float, b: float) -> float:
        """Integral of the x factor over [a, b]; a and b may be infinite"""
        table = _bump_antiderivative()
        sa = min(max(self._sx(a), -1.0), 1.0)
        sb = min(max(self._sx(b), -1.0), 1.0)
        return self.radius_x * float(table(sb) - table(sa))

    def t_factor(self, t: float) -> float:
        return float(_bump(self._st(t)))

    def t_factor_derivative(self, t: float) -> float:
        return float(_bump_derivative(self._st(t))) / self.radius_t

    def __call__(self, x: float, t: float) -> float:
        return self.x_factor(x) * self.t_factor(t)


# Weak residuals

def _rendered_frame(fan: WaveFan, t: float, rendering: Rendering, epsilon: float):
    fronts, states = fan.states_at(t)
    xs = [f.position(t) for f in fronts]
    lo, hi = list(xs), list(xs)
    n = len(fronts)
    if rendering == Rendering.SHADOW:
        for k, f in enumerate(fronts):
            if not f.is_shadow:
                continue
            half = 0.5 * epsilon * (t - f.birth_time)
            left_limit = 0.5 * (xs[k - 1] + xs[k]) if k > 0 else -math.inf
            right_limit = 0.5 * (xs[k] + xs[k + 1]) if k + 1 < n else math.inf
            lo[k] = max(xs[k] - half, left_limit)
            hi[k] = min(xs[k] + half, right_limit)
    edges = [-math.inf] + [v for pair in zip(lo, hi) for v in pair] + [math.inf]
    pieces = [(edges[2 * k], edges[2 * k + 1], s) for k, s in enumerate(states)]
    boxes = [(lo[k], hi[k], xs[k], f.strength(t), f.speed(t))
             for k, f in enumerate(fronts) if f.is_shadow]
    return pieces, boxes


def _box_means(phi: TestFunction, a: float, b: float) -> Tuple[float, float]:
    """Averages of the x factor and of its derivative over a narrow box [a, b]"""
    g, w = _gauss_rule(BOX_GAUSS_ORDER)
    s = (0.5 * (a + b) + 0.5 * (b - a) * g - phi.center_x) / phi.radius_x
    return 0.5 * float(w @ _bump(s)), 0.5 * float(w @ _bump_derivative(s)) / phi.radius_x


def _time_rule(t_lo: float, t_hi: float, breaks: Sequence[float], max_step: float) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [t_lo, t_hi], never straddling a break"""
    g, w = _gauss_rule(TIME_GAUSS_ORDER)
    edges = [t_lo, *breaks, t_hi]
    nodes, weights = [], []
    for a, b in zip(edges, edges[1:]):
        cuts = np.linspace(a, b, max(1, math.ceil((b - a) / max_step)) + 1)
        mid, half = 0.5 * (cuts[1:] + cuts[:-1]), 0.5 * np.diff(cuts)
        nodes.append((mid[:, None] + half[:, None] * g[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def weak_residual(fan: WaveFan, phi: TestFunction, rendering: Rendering = Rendering.ATOMS,
                  epsilon: Optional[float] = None, steps_per_radius: int = 32) -> Tuple[float, float]:
    """Mass and momentum weak-form defects (E1, E2) of the tracked solution against phi"""
    epsilon = fan.partition.epsilon if epsilon is None else epsilon
    t_lo, t_hi = phi.t_support
    if t_hi <= 0.0:
        raise PreconditionError("test function support lies before t=0")
    if t_hi > fan.t_now + fan.tolerances.tol_cluster:
        raise PreconditionError(f"test function reaches t={t_hi} beyond the evolved time {fan.t_now}")
    t_lo = max(t_lo, 0.0)

    def integrand(t: float) -> Tuple[float, float]:
        bt, dbt = phi.t_factor(t), phi.t_factor_derivative(t)
        if bt == 0.0 and dbt == 0.0:
            return 0.0, 0.0
        pieces, boxes = _rendered_frame(fan, t, rendering, epsilon)
        e1 = e2 = 0.0
        for a, b, s in pieces:
            if s.is_vacuum or b <= a:
                continue
            term = dbt * phi.x_integral(a, b) + s.u * bt * (phi.x_factor(b) - phi.x_factor(a))
            e1 += s.rho * term
            e2 += s.momentum * term
        for a, b, x, xi, u_s in boxes:
            if b > a:
                mean, mean_slope = _box_means(phi, a, b)
            else:
                mean, mean_slope = phi.x_factor(x), phi.x_factor_derivative(x)
            term = xi * (dbt * mean + u_s * bt * mean_slope)
            e1 += term
            e2 += u_s * term
        return e1, e2

    # events are kinks in time; each segment between them gets its own smooth rule
    breaks = sorted({e.time for e in fan.history if t_lo < e.time < t_hi})
    nodes, weights = _time_rule(t_lo, t_hi, breaks, phi.radius_t / steps_per_radius)
    values = np.array([integrand(float(t)) for t in nodes]).reshape(-1, 2)
    e1, e2 = (float(v) for v in weights @ values)

    if phi.t_support[0] < 0.0:
        # initial data term
        b0 = phi.t_factor(0.0)
        fronts, states = fan.states_at(0.0)
        edges = [-math.inf] + [f.position(0.0) for f in fronts] + [math.inf]
        for s, a, b in zip(states, edges, edges[1:]):
            e1 += b0 * s.rho * phi.x_integral(a, b)
            e2 += b0 * s.momentum * phi.x_integral(a, b)
    return e1, e2


def fit_slope(epsilons: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(epsilons)"""
    pairs = [(e, v) for e, v in zip(epsilons, values) if e > 0.0 and v > 0.0]
    if len(pairs) < 2:
        raise PreconditionError("slope fit needs at least two positive samples")
    x = np.log([e for e, _ in pairs])
    y = np.log([v for _, v in pairs])
    return float(np.polyfit(x, y, 1)[0])


# 0-SDW curves and the classical life span

@dataclass
class GammaCurve:
    """Sampled path (t, x) of the 0-SDW chain"""
    samples: List[Tuple[float, float]]
    level: int = 0
    ts: np.ndarray = field(init=False, repr=False, compare=False)
    xs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        table = np.asarray(self.samples, dtype=float).reshape(-1, 2)
        self.ts, self.xs = table[:, 0], table[:, 1]

    @property
    def anchor(self) -> float:
        return float(self.xs[0])

    @property
    def horizon(self) -> float:
        return float(self.ts[-1])

    def positions(self, times) -> np.ndarray:
        """Positions at many times, extended linearly past the last sample"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.interp(times, self.ts, self.xs)
        if len(self.ts) >= 2 and self.ts[-1] > self.ts[-2]:
            slope = (self.xs[-1] - self.xs[-2]) / (self.ts[-1] - self.ts[-2])
            beyond = times > self.ts[-1]
            out[beyond] = self.xs[-1] + slope * (times[beyond] - self.ts[-1])
        return out

    def position(self, t: float) -> float:
        return float(self.positions(t)[0])


def gamma_curve(fan: WaveFan, t_end: Optional[float] = None,
                interior: int = GAMMA_INTERIOR_SAMPLES) -> GammaCurve:
    """Sample the 0-SDW chain at its event times plus interior points of every segment"""
    t_end = fan.t_now if t_end is None else t_end
    chain = fan.zero_chain()
    if not chain:
        raise PreconditionError("the fan has no wave rooted at (R, 0)")
    samples: List[Tuple[float, float]] = []
    for front in chain:
        start = front.birth_time
        stop = t_end if front.death_time is None else min(front.death_time, t_end)
        if start > t_end:
            break
        for t in np.linspace(start, stop, interior + 2):
            t = float(t)
            if samples and t <= samples[-1][0]:
                continue
            samples.append((t, front.position(t)))
    return GammaCurve(samples=samples, level=fan.partition.level)


def gamma_distance(g1: GammaCurve, g2: GammaCurve, horizon: float) -> float:
    """Sup distance between two 0-SDW curves on [0, horizon]"""
    if abs(g1.anchor - g2.anchor) > 1e-12 * (1.0 + abs(g1.anchor)):
        raise PreconditionError(f"curves start at different anchors {g1.anchor} and {g2.anchor}")
    for g in (g1, g2):
        if g.horizon < horizon * (1.0 - 1e-12):
            raise PreconditionError(f"curve sampled to t={g.horizon} only, below {horizon}")
    times = np.concatenate([g1.ts, g2.ts])
    times = np.union1d(times[times <= horizon], [horizon])
    return float(np.max(np.abs(g1.positions(times) - g2.positions(times))))


def _slope(data: InitialData, x: float) -> float:
    if x > data.x_max:
        return 0.0
    return data.u_fn.derivative(x)


def t_max(data: InitialData, gamma: Optional[GammaCurve] = None) -> float:
    """Infimum of -1/u'(x) over focusing points D_x not yet swallowed by gamma"""
    xs = data.sample_grid()
    best = math.inf
    for x in xs:
        du = _slope(data, float(x))
        if du >= 0.0:
            continue
        T = -1.0 / du
        if T >= best:
            continue
        x_focus = float(x) + data.u_fn(float(x)) * T
        if gamma is not None and gamma.position(T) >= x_focus:
            continue
        best = T
    return best


def classical_solution(data: InitialData, x: float, t: float,
                       gamma: Optional[GammaCurve] = None, life: Optional[float] = None) -> FluidState:
    """State at (x, t) of the characteristics solution right of the 0-SDW"""
    if t < 0.0:
        raise PreconditionError(f"t={t} is negative")
    if t == 0.0:
        return data.left_state if x < data.R else data.state_at(x)
    life = t_max(data, gamma) if life is None else life
    if t >= life:
        raise PreconditionError(f"t={t} is past the classical life span {life}")
    if gamma is not None and x < gamma.position(t):
        raise PreconditionError(f"x={x} lies left of the 0-SDW at t={t}")

    u_R = data.u_fn(data.R)
    x_R = data.R + u_R * t
    if x < x_R:
        u0 = data.left_state.u
        if u0 > u_R:
            raise PreconditionError(f"x={x} lies in the delta shock region at t={t}")
        if x < data.R + u0 * t or u0 == u_R:
            return data.left_state
        vacuum = VacuumFan(anchor=data.R, u_left=u0, u_right=u_R)
        e = 0.0 if data.is_three_by_three else None
        return FluidState(rho=0.0, u=vacuum.velocity(x, t), e=e, fan=vacuum)

    def foot(psi: float) -> float:
        return psi + data.u_fn(min(psi, data.x_max)) * t - x

    hi = max(data.x_max, x - data.u_fn(data.x_max) * t) + 1.0
    psi = data.R if foot(data.R) >= 0.0 else brentq(foot, data.R, hi, xtol=1e-14, rtol=1e-14)
    base = data.state_at(psi)
    stretch = 1.0 + _slope(data, psi) * t
    if stretch <= 0.0:
        raise InvariantError(f"characteristics crossed at x={x}, t={t}")
    return FluidState(rho=base.rho / stretch, u=base.u, e=base.e)


# Convergence instruments

def velocity_l1_error(fan: WaveFan, data: InitialData, t: float, interval: Tuple[float, float],
                      gamma: Optional[GammaCurve] = None) -> float:
    """L1 distance on interval between tracked and classical velocities at time t"""
    a, b = interval
    life = t_max(data, gamma)
    shot = snapshot(fan, t, window=(min(a, fan.window(t)[0]), max(b, fan.window(t)[1])))
    edges = sorted({a, b} | {p.x_right for p in shot.pieces if a < p.x_right < b})
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        piece = shot.piece_at(0.5 * (lo + hi))

        def gap(x: float) -> float:
            return abs(piece.state.velocity_at(x, t) - classical_solution(data, x, t, gamma, life).u)

        value, _ = quad(gap, lo, hi, epsabs=fan.tolerances.quad_abs_tol, limit=100)
        total += value
    return total


def interval_mass(shot: MeasureSnapshot, a: float, b: float) -> float:
    """Tracked mass in [a, b], atoms included"""
    pieces = math.fsum(p.state.rho * max(0.0, min(b, p.x_right) - max(a, p.x_left)) for p in shot.pieces)
    atoms = math.fsum(at.mass for at in shot.atoms if a <= at.x <= b)
    return pieces + atoms


def classical_mass(data: InitialData, t: float, a: float, b: float,
                   gamma: Optional[GammaCurve] = None, life: Optional[float] = None) -> float:
    life = t_max(data, gamma) if life is None else life
    value, _ = quad(lambda x: classical_solution(data, x, t, gamma, life).rho, a, b, limit=200)
    return value


def mass_distribution_error(fan: WaveFan, data: InitialData, t: float, interval: Tuple[float, float],
                            gamma: Optional[GammaCurve] = None) -> float:
    """Sup over the interval of the gap between tracked and classical cumulative mass"""
    a, b = interval
    life = t_max(data, gamma)
    shot = snapshot(fan, t, window=(min(a, fan.window(t)[0]), max(b, fan.window(t)[1])))
    edges = sorted({a, b} | {p.x_right for p in shot.pieces if a < p.x_right < b})
    worst = 0.0
    cumulative = 0.0
    for lo, hi in zip(edges, edges[1:]):
        cumulative += classical_mass(data, t, lo, hi, gamma, life)
        worst = max(worst, abs(interval_mass(shot, a, hi) - cumulative))
    return worst


def characteristic_interval(data: InitialData, y_lo: float, y_hi: float, t: float) -> Tuple[float, float]:
    return y_lo + data.u_fn(y_lo) * t, y_hi + data.u_fn(y_hi) * t


def mass_transport_error(fan: WaveFan, data: InitialData, y_lo: float, y_hi: float, t: float) -> float:
    """|M([X-, X+]) at t - M([Y-, Y+]) at 0| along characteristics"""
    x_lo, x_hi = characteristic_interval(data, y_lo, y_hi, t)
    initial, _ = quad(data.rho_fn, y_lo, y_hi, epsabs=fan.tolerances.quad_abs_tol, limit=200)
    shot = snapshot(fan, t, window=(min(x_lo, fan.window(t)[0]), max(x_hi, fan.window(t)[1])))
    return abs(interval_mass(shot, x_lo, x_hi) - initial)


@dataclass
class LedgerRow:
    """Conserved totals at one time against the boundary-flux prediction"""
    t: float
    mass: float
    momentum: float
    energy: Optional[float]
    mass_error: float
    momentum_error: float
    energy_error: Optional[float] = None

    @property
    def worst(self) -> float:
        return max(self.mass_error, self.momentum_error, self.energy_error or 0.0)


def conservation_ledger(fan: WaveFan, times: Sequence[float],
                        window: Optional[Tuple[float, float]] = None) -> List[LedgerRow]:
    """Relative conservation errors over a fixed window, corrected for boundary flux"""
    window = fan.window(max(times, default=fan.t_now)) if window is None else window
    left, right = fan.left_state, fan.right_state
    mass_flux = left.momentum - right.momentum
    momentum_flux = left.momentum * left.u - right.momentum * right.u
    energy_flux = left.u * left.energy - right.u * right.energy
    start = snapshot(fan, 0.0, window)
    rows = []
    for t in times:
        shot = snapshot(fan, t, window)
        expected_mass = start.total_mass + mass_flux * t
        expected_momentum = start.total_momentum + momentum_flux * t
        mass_scale = max(abs(expected_mass), 1e-300)
        momentum_scale = max(shot.momentum_scale(), 1e-300)
        energy = energy_error = None
        if fan.with_energy:
            energy = shot.total_energy
            expected_energy = start.total_energy + energy_flux * t
            energy_error = abs(energy - expected_energy) / max(abs(expected_energy), 1e-300)
        rows.append(LedgerRow(
            t=t,
            mass=shot.total_mass,
            momentum=shot.total_momentum,
            energy=energy,
            mass_error=abs(shot.total_mass - expected_mass) / mass_scale,
            momentum_error=abs(shot.total_momentum - expected_momentum) / momentum_scale,
            energy_error=energy_error,
        ))
    return rows


@dataclass
class BoundsReport:
    """Uniform bounds of speeds and strengths over the sampled times"""
    speed_range: Tuple[float, float]
    max_strength: float
    total_mass: float
    speed_violations: int = 0
    overcompressive_violations: int = 0

    @property
    def ok(self) -> bool:
        return self.speed_violations == 0 and self.overcompressive_violations == 0


def check_uniform_bounds(fan: WaveFan, times: Sequence[float], data: Optional[InitialData] = None,
                         tol: Optional[float] = None) -> BoundsReport:
    """Speeds stay in [min(u0, inf u), max(u0, sup u)] and every shadow wave stays overcompressive

    Without the initial data the range of the sampled states is used.
    """
    tol = fan.tolerances.overcompressive_tol if tol is None else tol
    if data is not None:
        low, high = data.velocity_range()
    else:
        us = [s.u for s in fan.samples.states]
        low, high = min(us), max(us)
    window = fan.window(max(times, default=fan.t_now))
    report = BoundsReport(speed_range=(low, high), max_strength=0.0,
                          total_mass=snapshot(fan, 0.0, window).total_mass)
    for t in times:
        for f in fan.fronts_at(t):
            u_s = f.speed(t)
            slack = tol * (1.0 + abs(u_s))
            if u_s < low - slack or u_s > high + slack:
                report.speed_violations += 1
            if f.is_shadow:
                report.max_strength = max(report.max_strength, f.strength(t))
                if (not f.left.is_vacuum and u_s > f.left.u + slack) or \
                        (not f.right.is_vacuum and u_s < f.right.u - slack):
                    report.overcompressive_violations += 1
    if not math.isfinite(report.max_strength):
        report.speed_violations += 1
    return report


def assumption_alpha(fan: WaveFan, times: Sequence[float]) -> float:
    """Least gap u_s(t) - u(c(t)+, t) along the 0-SDW chain"""
    best = math.inf
    chain = fan.zero_chain()
    for t in times:
        for front in chain:
            if not front.is_alive(t) or not front.is_shadow:
                continue
            x = front.position(t)
            best = min(best, front.speed(t) - front.right.velocity_at(x, t))
    if best <= 0.0:
        logger.warning(f"0-SDW does not outrun the flow on its right: alpha={best:.6g}")
    return best


# Refinement sweep

def refine_partition(p: Partition, fraction: float = 0.5) -> Partition:
    """Split every cell at the given fraction; mu halves and the spacing bounds are re-checked"""
    if not 0.0 < fraction < 1.0:
        raise PreconditionError(f"split fraction must lie in (0, 1), got {fraction}")
    points = [p.points[0]]
    for a, b in zip(p.points, p.points[1:]):
        points.extend([a + fraction * (b - a), b])
    refined = Partition(points=tuple(points), epsilon=p.epsilon / 8.0, C=p.C, mode=p.mode, level=p.level + 1)
    refined.check_bounds()
    return refined


def run_level(config: RunConfig, partition: Optional[Partition] = None) -> WaveFan:
    """Track one partition of the configured data up to t_end"""
    data = config.initial_data
    if partition is None:
        partition = build_partition(data, config.epsilon, config.C, config.spacing_factor)
    samples = sample_states(data, partition)
    fan = initialize(samples, partition, tolerances=config.tolerances, with_energy=config.with_energy)
    return fan.run_until(config.t_end)


@dataclass
class LevelResult:
    """Instruments measured on one refinement level"""
    level: int
    epsilon: float
    mu: float
    fronts: int
    events: int
    E1: Optional[float] = None
    E2: Optional[float] = None
    gamma_distance: Optional[float] = None
    velocity_l1: Optional[float] = None
    mass_error: Optional[float] = None
    alpha: Optional[float] = None
    t_max: Optional[float] = None
    fan: Optional[WaveFan] = field(default=None, repr=False)
    gamma: Optional[GammaCurve] = field(default=None, repr=False)


def default_test_function(config: RunConfig) -> Optional[TestFunction]:
    if config.test_function is not None:
        return TestFunction.from_config(config.test_function)
    if config.t_end <= 0.0:
        return None
    data = config.initial_data
    return TestFunction.inside(data.R, data.x_max, 0.0, config.t_end)


def measure_level(config: RunConfig, fan: WaveFan) -> LevelResult:
    """Weak residuals, oracle errors and assumption checks for one tracked level"""
    p = fan.partition
    result = LevelResult(level=p.level, epsilon=p.epsilon, mu=p.mu, fronts=len(fan.fronts),
                         events=len(fan.history), fan=fan)
    phi = default_test_function(config)
    if phi is not None:
        result.E1, result.E2 = weak_residual(fan, phi, Rendering.SHADOW, p.epsilon)
    try:
        result.gamma = gamma_curve(fan, config.t_end)
    except PreconditionError:
        result.gamma = None
    times = list(np.linspace(0.0, config.t_end, config.diagnostics.sample_count))
    if result.gamma is not None:
        result.alpha = assumption_alpha(fan, times)
    data = config.initial_data
    result.t_max = t_max(data, result.gamma)
    if config.t_end < result.t_max:
        try:
            result.velocity_l1 = velocity_l1_error(fan, data, config.t_end, config.oracle_interval, result.gamma)
            result.mass_error = mass_distribution_error(fan, data, config.t_end, config.oracle_interval,
                                                        result.gamma)
        except PreconditionError as e:
            logger.warning(f"Oracle column omitted at level {p.level}: {e}")
    else:
        logger.warning(f"Oracle column omitted: t_end={config.t_end} >= T_max={result.t_max:.6g}")
    return result


async def converge(config: RunConfig, levels: Optional[int] = None,
                   fraction: float = 0.5) -> List[LevelResult]:
    """Run the refinement sweep concurrently and compare consecutive 0-SDW curves"""
    levels = config.levels if levels is None else levels
    data = config.initial_data
    partitions = [build_partition(data, config.epsilon, config.C, config.spacing_factor)]
    for _ in range(levels - 1):
        partitions.append(refine_partition(partitions[-1], fraction))

    async def one(p: Partition) -> LevelResult:
        fan = await asyncio.to_thread(run_level, config, p)
        return await asyncio.to_thread(measure_level, config, fan)

    results = list(await asyncio.gather(*(one(p) for p in partitions)))
    for previous, current in zip(results, results[1:]):
        if previous.gamma is None or current.gamma is None:
            continue
        life = min(config.t_end, current.t_max if current.t_max is not None else math.inf)
        horizon = config.gamma_horizon_fraction * life
        current.gamma_distance = gamma_distance(previous.gamma, current.gamma, horizon)
    logger.info(f"Convergence sweep finished with {len(results)} levels")
    return results
