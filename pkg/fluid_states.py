"""
Fluid states, initial data and partitions for SDWTRACK
Core value types shared by the Riemann solver, the shadow-wave closed forms and the front tracker
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from scipy.interpolate import PchipInterpolator

from sdwtrack_errors import PreconditionError

logger = logging.getLogger(__name__)

# Dense sampling used for positivity and monotonicity checks of profiles
PROFILE_CHECK_SAMPLES = 2049


class SystemMode(str, Enum):
    """Which pressureless system is being solved"""
    TWO_BY_TWO = "2x2"
    THREE_BY_THREE = "3x3"


class ProfileKind(str, Enum):
    """Catalog of initial profiles"""
    CONSTANT = "constant"
    LINEAR = "linear"
    AFFINE_BY_PARTS = "affine_by_parts"
    TANH_RAMP = "tanh_ramp"
    TABULATED = "tabulated"


class PartitionMode(str, Enum):
    """Partition regime"""
    GENERAL = "general"
    DECREASING_ONLY = "decreasing_only"


@dataclass(frozen=True)
class VacuumFan:
    """Vacuum region opened at t=0 between two contact discontinuities"""
    anchor: float
    u_left: float
    u_right: float

    def edges(self, t: float) -> Tuple[float, float]:
        return self.anchor + self.u_left * t, self.anchor + self.u_right * t

    def velocity(self, x: float, t: float) -> float:
        """Velocity inside the fan, linear in x between the two edge speeds"""
        if t <= 0.0:
            return self.u_left
        left_edge, right_edge = self.edges(t)
        slack = 1e-9 * (1.0 + abs(x))
        if x < left_edge - slack or x > right_edge + slack:
            raise PreconditionError(
                f"x={x} lies outside the vacuum fan [{left_edge}, {right_edge}] at t={t}"
            )
        s = (x - left_edge) / (right_edge - left_edge)
        s = min(max(s, 0.0), 1.0)
        return self.u_left + s * (self.u_right - self.u_left)


@dataclass(frozen=True)
class FluidState:
    """Constant state (rho, u[, e]) of a region between two fronts"""
    rho: float
    u: float
    e: Optional[float] = None
    fan: Optional[VacuumFan] = None

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0.0:
            raise PreconditionError(f"density must be finite and non-negative, got {self.rho}")
        if not math.isfinite(self.u):
            raise PreconditionError(f"velocity must be finite, got {self.u}")
        if self.e is not None and (not math.isfinite(self.e) or self.e < 0.0):
            raise PreconditionError(f"internal energy must be finite and non-negative, got {self.e}")

    @property
    def is_vacuum(self) -> bool:
        return self.rho == 0.0

    @property
    def momentum(self) -> float:
        return self.rho * self.u

    @property
    def energy(self) -> float:
        """Total energy density rho (u^2/2 + e)"""
        return self.rho * (0.5 * self.u * self.u + (self.e or 0.0))

    def velocity_at(self, x: float, t: float) -> float:
        """Velocity at (x, t); vacuum states defer to their fan"""
        if self.fan is not None:
            return self.fan.velocity(x, t)
        return self.u


class ProfileSpec(BaseModel):
    """Initial profile given as a catalog entry with parameters or as a dense table"""
    model_config = ConfigDict(frozen=True)

    kind: ProfileKind
    params: Dict[str, float] = Field(default_factory=dict)
    knots: List[float] = Field(default_factory=list)
    values: List[float] = Field(default_factory=list)

    _interpolant: Optional[PchipInterpolator] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_shape(self):
        required = {
            ProfileKind.CONSTANT: ("value",),
            ProfileKind.LINEAR: ("intercept", "slope"),
            ProfileKind.TANH_RAMP: ("low", "high", "center", "width"),
        }
        if self.kind in required:
            missing = [name for name in required[self.kind] if name not in self.params]
            if missing:
                raise ValueError(f"{self.kind.value} profile needs parameters {missing}")
            if self.kind == ProfileKind.TANH_RAMP and self.params["width"] <= 0.0:
                raise ValueError("tanh_ramp width must be positive")
        else:
            if len(self.knots) < 2 or len(self.knots) != len(self.values):
                raise ValueError(f"{self.kind.value} profile needs matching knots and values (at least two)")
            if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
                raise ValueError("profile knots must be strictly increasing")
        return self

    @classmethod
    def constant(cls, value: float) -> "ProfileSpec":
        return cls(kind=ProfileKind.CONSTANT, params={"value": value})

    @classmethod
    def linear(cls, intercept: float, slope: float) -> "ProfileSpec":
        return cls(kind=ProfileKind.LINEAR, params={"intercept": intercept, "slope": slope})

    def _pchip(self) -> PchipInterpolator:
        if self._interpolant is None:
            self._interpolant = PchipInterpolator(self.knots, self.values, extrapolate=False)
        return self._interpolant

    def __call__(self, x: float) -> float:
        p = self.params
        if self.kind == ProfileKind.CONSTANT:
            return float(p["value"])
        if self.kind == ProfileKind.LINEAR:
            return float(p["intercept"] + p["slope"] * x)
        if self.kind == ProfileKind.TANH_RAMP:
            s = math.tanh((x - p["center"]) / p["width"])
            return float(p["low"] + 0.5 * (p["high"] - p["low"]) * (1.0 + s))
        if self.kind == ProfileKind.AFFINE_BY_PARTS:
            return float(np.interp(x, self.knots, self.values))
        # tabulated: monotone cubic inside the table, constant outside
        xc = min(max(x, self.knots[0]), self.knots[-1])
        return float(self._pchip()(xc))

    def derivative(self, x: float) -> float:
        p = self.params
        if self.kind == ProfileKind.CONSTANT:
            return 0.0
        if self.kind == ProfileKind.LINEAR:
            return float(p["slope"])
        if self.kind == ProfileKind.TANH_RAMP:
            sech = 1.0 / math.cosh((x - p["center"]) / p["width"])
            return float(0.5 * (p["high"] - p["low"]) * sech * sech / p["width"])
        if x < self.knots[0] or x > self.knots[-1]:
            return 0.0
        if self.kind == ProfileKind.AFFINE_BY_PARTS:
            i = int(np.searchsorted(self.knots, x, side="right")) - 1
            i = min(max(i, 0), len(self.knots) - 2)
            return float((self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]))
        return float(self._pchip().derivative()(x))

    def extrema(self) -> List[float]:
        """Interior knots where the profile switches between increasing and decreasing"""
        if self.kind not in (ProfileKind.AFFINE_BY_PARTS, ProfileKind.TABULATED):
            return []
        slopes = np.diff(self.values) / np.diff(self.knots)
        found = []
        for i in range(1, len(slopes)):
            if slopes[i - 1] * slopes[i] < 0.0:
                found.append(float(self.knots[i]))
        return found

    def breakpoints(self) -> List[float]:
        return list(self.knots)


class InitialData(BaseModel):
    """Constant state left of R glued to smooth profiles right of R"""
    model_config = ConfigDict(frozen=True)

    left_state: FluidState
    R: float = 0.0
    rho_fn: ProfileSpec
    u_fn: ProfileSpec
    e_fn: Optional[ProfileSpec] = None
    x_max: float
    extrema: Optional[List[float]] = None
    mode: SystemMode = SystemMode.TWO_BY_TWO

    @model_validator(mode="after")
    def _check_window(self):
        if self.x_max <= self.R:
            raise ValueError(f"x_max={self.x_max} must exceed R={self.R}")
        if self.mode == SystemMode.THREE_BY_THREE:
            if self.e_fn is None or self.left_state.e is None:
                raise ValueError("3x3 mode needs e_fn and left_state.e")
        elif self.left_state.e is not None:
            raise ValueError("left_state.e is only allowed in 3x3 mode")
        xs = self.sample_grid()
        rho = np.array([self.rho_fn(x) for x in xs])
        if np.any(rho <= 0.0):
            raise ValueError("rho_fn must stay positive on [R, x_max]")
        if self.e_fn is not None:
            e = np.array([self.e_fn(x) for x in xs])
            if np.any(e < 0.0):
                raise ValueError("e_fn must stay non-negative on [R, x_max]")
        return self

    def sample_grid(self) -> np.ndarray:
        """Dense grid over [R, x_max] including profile breakpoints"""
        xs = np.linspace(self.R, self.x_max, PROFILE_CHECK_SAMPLES)
        extra = [k for k in self.u_fn.breakpoints() + self.rho_fn.breakpoints() if self.R <= k <= self.x_max]
        return np.unique(np.concatenate([xs, np.asarray(extra, dtype=float)]))

    @property
    def is_three_by_three(self) -> bool:
        return self.mode == SystemMode.THREE_BY_THREE

    def state_at(self, x: float) -> FluidState:
        """Smooth state at x > R, constant beyond x_max"""
        xc = min(x, self.x_max)
        e = self.e_fn(xc) if self.is_three_by_three else None
        return FluidState(rho=self.rho_fn(xc), u=self.u_fn(xc), e=e)

    def u_extrema(self) -> List[float]:
        declared = self.extrema if self.extrema is not None else self.u_fn.extrema()
        return sorted(x for x in declared if self.R < x < self.x_max)

    def velocity_range(self) -> Tuple[float, float]:
        """[min(u0, inf u), max(u0, sup u)] over [R, x_max]; every front speed stays inside"""
        us = np.array([self.u_fn(x) for x in self.sample_grid()] + [self.left_state.u])
        return float(us.min()), float(us.max())

    def is_decreasing(self) -> bool:
        us = np.array([self.u_fn(x) for x in self.sample_grid()])
        return bool(np.all(np.diff(us) <= 0.0))

    def is_increasing(self) -> bool:
        us = np.array([self.u_fn(x) for x in self.sample_grid()])
        return bool(np.all(np.diff(us) >= 0.0))


@dataclass(frozen=True)
class Partition:
    """Partition R = Y_0 < Y_1 < ... of the window into cells (Y_i, Y_{i+1}]"""
    points: Tuple[float, ...]
    epsilon: float
    C: float = 1.0
    mode: PartitionMode = PartitionMode.GENERAL
    level: int = 0

    @property
    def mu(self) -> float:
        """Lower spacing bound, the cube root of epsilon"""
        return float(np.cbrt(self.epsilon))

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(np.asarray(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def check_bounds(self, rtol: float = 1e-9) -> None:
        gaps = self.spacings
        if len(gaps) == 0:
            raise PreconditionError("partition needs at least two points")
        low, high = self.mu * (1.0 - rtol), self.C * self.mu * (1.0 + rtol)
        if gaps.min() < low or gaps.max() > high:
            raise PreconditionError(
                f"partition spacing [{gaps.min():.6g}, {gaps.max():.6g}] outside "
                f"[{self.mu:.6g}, {self.C * self.mu:.6g}]; increase C"
            )


@dataclass(frozen=True)
class SampledStates:
    """Piecewise constant approximation of the initial data on a partition"""
    states: Tuple[FluidState, ...]
    partition: Partition
    index_set: Tuple[int, ...]


def _snap_extrema(points: List[float], extrema: List[float], mu: float) -> List[float]:
    anchored = set()
    for x_star in extrema:
        # the endpoints R and x_max never move
        candidates = range(1, len(points) - 1)
        if not candidates:
            logger.warning(f"Partition has no interior point to snap onto the extremum at {x_star}")
            continue
        k = min(candidates, key=lambda i: (abs(points[i] - x_star), i))
        if x_star - points[0] < mu * (1.0 - 1e-9):
            logger.warning(f"Extremum at {x_star} is closer than {mu:.6g} to R; not snapped")
            continue
        points[k] = x_star
        anchored.add(k)
        last = len(points) - 1
        if k - 1 > 0 and points[k] - points[k - 1] < mu * (1.0 - 1e-9) and (k - 1) not in anchored:
            del points[k - 1]
            anchored = {i - 1 if i > k - 1 else i for i in anchored}
        elif k + 1 < last and points[k + 1] - points[k] < mu * (1.0 - 1e-9) and (k + 1) not in anchored:
            del points[k + 1]
            anchored = {i - 1 if i > k + 1 else i for i in anchored}
        last = len(points) - 1
        k = points.index(x_star)
        if k + 1 == last and points[last] - x_star < mu * (1.0 - 1e-9):
            # last cell reaches past x_max; the data are constant there anyway
            points[last] = x_star + mu
    return points


def build_partition(data: InitialData, epsilon: float, C: float = 1.0,
                    spacing_factor: float = 1.0) -> Partition:
    """Equidistant partition with spacing spacing_factor * cbrt(epsilon), snapped to extrema of u"""
    if not epsilon > 0.0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    if C < 1.0:
        raise PreconditionError(f"C must be at least 1, got {C}")
    if not 1.0 <= spacing_factor <= C:
        raise PreconditionError(f"spacing_factor must lie in [1, C], got {spacing_factor}")
    length = data.x_max - data.R
    mu = float(np.cbrt(epsilon))
    if mu > length * (1.0 + 1e-12):
        raise PreconditionError(f"cbrt(epsilon)={mu:.6g} exceeds the window length {length:.6g}")

    step = min(spacing_factor * mu, length)
    n = max(1, int(math.floor(length / step + 1e-9)))
    points = [data.R + step * k for k in range(n + 1)]
    remainder = data.x_max - points[-1]
    if abs(remainder) <= 1e-9 * step:
        points[-1] = data.x_max
    elif remainder >= mu * (1.0 - 1e-9):
        points.append(data.x_max)
    elif points[-1] - points[-2] + remainder <= C * mu * (1.0 + 1e-9):
        points[-1] = data.x_max
    else:
        # last cell reaches past x_max; the data are constant there anyway
        points.append(points[-1] + step)

    points = _snap_extrema(points, data.u_extrema(), mu)
    mode = PartitionMode.DECREASING_ONLY if data.is_decreasing() else PartitionMode.GENERAL
    partition = Partition(points=tuple(points), epsilon=epsilon, C=C, mode=mode)
    partition.check_bounds()
    logger.debug(f"Built partition with {len(points)} points, mu={mu:.6g}, mode={mode.value}")
    return partition


def sample_states(data: InitialData, p: Partition) -> SampledStates:
    """Right-endpoint sampling: state i+1 is the data at Y_{i+1}"""
    if abs(p.points[0] - data.R) > 1e-12 * (1.0 + abs(data.R)) or p.points[-1] < data.x_max - 1e-12:
        raise PreconditionError("partition does not cover [R, x_max] for these data")
    states = [data.left_state]
    for y in p.points[1:]:
        x = min(y, data.x_max)
        rho = data.rho_fn(x)
        if rho <= 0.0:
            raise PreconditionError(f"rho_fn({x}) = {rho} is not positive")
        e = data.e_fn(x) if data.is_three_by_three else None
        states.append(FluidState(rho=rho, u=data.u_fn(x), e=e))
    return SampledStates(states=tuple(states), partition=p, index_set=tuple(range(len(states))))
