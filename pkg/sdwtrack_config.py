"""
SDWTRACK Run Configuration
Tolerances, diagnostics toggles and run parameters for the front tracker
"""

import json
import os
import sys
from pathlib import Path
from typing import List, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from fluid_states import InitialData, SystemMode
from sdwtrack_errors import ConfigError

TOLERANCE_OVERRIDE_ENV = "SDWTRACK_TOL_OVERRIDE"


class ToleranceConfig(BaseModel):
    """Numerical tolerances shared by all modules"""
    tol_cluster: float = Field(1e-9, gt=0)
    root_xtol: float = Field(1e-12, gt=0)
    quad_abs_tol: float = Field(1e-10, gt=0)
    overcompressive_tol: float = Field(1e-9, gt=0)
    conservation_rtol: float = Field(1e-9, gt=0)
    ordering_tol: float = Field(1e-9, gt=0)


class DiagnosticsConfig(BaseModel):
    """Which runtime checks an evolve run performs"""
    conservation: bool = True
    overcompressibility: bool = True
    entropy: bool = False
    bounds: bool = True
    sample_count: int = Field(100, ge=2)


class TestFunctionConfig(BaseModel):
    """Rectangle carrying a smooth bump test function"""
    __test__ = False

    center_x: float
    center_t: float
    radius_x: float = Field(gt=0)
    radius_t: float = Field(gt=0)


class RunConfig(BaseModel):
    """Complete description of one tracker run"""
    initial_data: InitialData
    epsilon: float = Field(1e-3, gt=0)
    C: float = Field(1.5, ge=1)
    spacing_factor: float = Field(1.0, ge=1)
    t_end: float = Field(1.0, ge=0)
    snapshot_times: List[float] = Field(default_factory=list)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    output_dir: str = "output"
    levels: int = Field(1, ge=1)
    seed: int = 0
    test_function: Optional[TestFunctionConfig] = None
    oracle_interval: Tuple[float, float] = (0.2, 0.8)
    gamma_horizon_fraction: float = Field(0.8, gt=0, le=1)
    entropy_window: Optional[float] = Field(None, gt=0)
    log_level: str = "info"

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.spacing_factor > self.C:
            raise ValueError(f"spacing_factor={self.spacing_factor} exceeds C={self.C}")
        if any(t < 0.0 or t > self.t_end for t in self.snapshot_times):
            raise ValueError("snapshot_times must lie in [0, t_end]")
        lo, hi = self.oracle_interval
        if hi <= lo:
            raise ValueError("oracle_interval must be increasing")
        return self

    @property
    def mode(self) -> SystemMode:
        return self.initial_data.mode

    @property
    def with_energy(self) -> bool:
        return self.initial_data.mode == SystemMode.THREE_BY_THREE

    def with_overrides(self, epsilon: Optional[float] = None, t_end: Optional[float] = None,
                       levels: Optional[int] = None, output_dir: Optional[str] = None,
                       mode: Optional[str] = None) -> "RunConfig":
        """Copy with command line overrides applied and re-validated"""
        raw = self.model_dump(mode="json")
        if epsilon is not None:
            raw["epsilon"] = epsilon
        if t_end is not None:
            raw["t_end"] = t_end
            raw["snapshot_times"] = [t for t in raw["snapshot_times"] if t <= t_end]
        if levels is not None:
            raw["levels"] = levels
        if output_dir is not None:
            raw["output_dir"] = output_dir
        if mode is not None:
            raw["initial_data"]["mode"] = mode
        return parse_run_config(raw)


def parse_run_config(raw: Union[str, Mapping]) -> RunConfig:
    try:
        if isinstance(raw, str):
            return RunConfig.model_validate_json(raw)
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read configuration {path}: {e}") from e
    return parse_run_config(text)


def dump_run_config(config: RunConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")


def apply_tolerance_override(tolerances: ToleranceConfig,
                             environ: Optional[Mapping[str, str]] = None) -> ToleranceConfig:
    """Merge the JSON object in SDWTRACK_TOL_OVERRIDE over the given tolerances"""
    environ = os.environ if environ is None else environ
    raw = environ.get(TOLERANCE_OVERRIDE_ENV)
    if not raw:
        return tolerances
    try:
        override = json.loads(raw)
        if not isinstance(override, dict):
            raise ValueError("override must be a JSON object")
        unknown = set(override) - set(ToleranceConfig.model_fields)
        if unknown:
            raise ValueError(f"unknown tolerance fields {sorted(unknown)}")
        return ToleranceConfig.model_validate({**tolerances.model_dump(), **override})
    except (ValueError, ValidationError) as e:
        raise ConfigError(f"{TOLERANCE_OVERRIDE_ENV} is invalid: {e}") from e


# Default configuration instances
default_tolerances = ToleranceConfig()


# Configuration validation
def validate_config(path: Optional[Union[str, Path]] = None) -> bool:
    """Validate a run configuration file, or the defaults when no file is given"""
    try:
        if path is not None:
            load_run_config(path)
        apply_tolerance_override(default_tolerances)
        print("✅ SDWTRACK configuration validation passed")
        return True
    except ConfigError as e:
        print(f"❌ SDWTRACK configuration validation failed: {e}")
        return False


if __name__ == "__main__":
    print("SDWTRACK Configuration Module")
    print("=" * 30)

    target = sys.argv[1] if len(sys.argv) > 1 else None
    if validate_config(target):
        print("\nConfiguration Summary:")
        print(f"Cluster tolerance: {default_tolerances.tol_cluster}")
        print(f"Root tolerance: {default_tolerances.root_xtol}")
        print(f"Quadrature tolerance: {default_tolerances.quad_abs_tol}")
        if target is not None:
            config = load_run_config(target)
            print(f"Mode: {config.mode.value}, epsilon={config.epsilon}, t_end={config.t_end}")
    else:
        print("Configuration validation failed!")
