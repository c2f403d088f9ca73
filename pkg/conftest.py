"""
Shared fixtures for the SDWTRACK tests
Golden configurations, common states and cached tracker runs
"""

from functools import lru_cache
from pathlib import Path
from typing import Tuple

import pytest

from convergence_analysis import run_level
from fluid_states import FluidState, InitialData, ProfileSpec
from front_tracker import WaveFan
from sdwtrack_config import RunConfig, load_run_config

CONFIG_DIR = Path(__file__).resolve().parent / "configs"
GOLDEN = (
    "case_i_increasing",
    "case_ii_absorbing",
    "case_ii_stopping",
    "case_iii_constant_rho",
    "case_iv_vacuum",
    "monotonicity_change",
    "three_by_three",
)


def config_path(name: str) -> Path:
    return CONFIG_DIR / f"{name}.json"


@lru_cache(maxsize=None)
def golden_run(name: str) -> Tuple[RunConfig, WaveFan]:
    """Track a golden configuration once per session"""
    config = load_run_config(config_path(name))
    return config, run_level(config)


def simple_data(left: Tuple[float, float], rho: float, u: float, x_max: float = 1.0) -> InitialData:
    """Constant state on each side of R=0"""
    return InitialData(left_state=FluidState(rho=left[0], u=left[1]), R=0.0,
                       rho_fn=ProfileSpec.constant(rho), u_fn=ProfileSpec.constant(u), x_max=x_max)


@pytest.fixture
def configs_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def symmetric_states() -> Tuple[FluidState, FluidState]:
    return FluidState(rho=1.0, u=1.0), FluidState(rho=1.0, u=-1.0)


@pytest.fixture
def unequal_states() -> Tuple[FluidState, FluidState]:
    return FluidState(rho=1.0, u=2.0), FluidState(rho=4.0, u=0.0)


@pytest.fixture
def linear_data() -> InitialData:
    """u(x) = x, rho = 1 on [0, 1]"""
    return InitialData(left_state=FluidState(rho=1.0, u=0.0), R=0.0,
                       rho_fn=ProfileSpec.constant(1.0), u_fn=ProfileSpec.linear(0.0, 1.0), x_max=1.0)


@pytest.fixture
def decreasing_data() -> InitialData:
    """u(x) = 1 - x, rho = 1 on [0, 1], u0 = 2"""
    return InitialData(left_state=FluidState(rho=1.0, u=2.0), R=0.0,
                       rho_fn=ProfileSpec.constant(1.0), u_fn=ProfileSpec.linear(1.0, -1.0), x_max=1.0)
