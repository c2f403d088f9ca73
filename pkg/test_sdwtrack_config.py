#!/usr/bin/env python3
"""
Tests for SDWTRACK run configuration loading and overrides
"""

import json
import sys

import pytest

from conftest import GOLDEN, config_path
from fluid_states import SystemMode
from sdwtrack_config import (
    TOLERANCE_OVERRIDE_ENV, ToleranceConfig, apply_tolerance_override, default_tolerances, dump_run_config,
    load_run_config, parse_run_config, validate_config,
)
from sdwtrack_errors import ConfigError


def test_golden_configs_load():
    """Test that every shipped configuration parses"""
    for name in GOLDEN + ("residual_benchmark", "classical_limit"):
        config = load_run_config(config_path(name))
        assert config.epsilon == 1e-3
        assert config.initial_data.R == 0.0


def test_three_by_three_mode():
    config = load_run_config(config_path("three_by_three"))
    assert config.mode == SystemMode.THREE_BY_THREE
    assert config.with_energy
    assert not load_run_config(config_path("case_i_increasing")).with_energy


def test_dump_and_reload(tmp_path):
    config = load_run_config(config_path("monotonicity_change"))
    target = tmp_path / "config.json"
    dump_run_config(config, target)
    assert load_run_config(target).model_dump() == config.model_dump()


def test_invalid_configs(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")
    with pytest.raises(ConfigError):
        parse_run_config("{not json")
    raw = json.loads(config_path("case_i_increasing").read_text())
    raw["spacing_factor"] = 2.0
    with pytest.raises(ConfigError):
        parse_run_config(raw)
    raw = json.loads(config_path("case_i_increasing").read_text())
    raw["snapshot_times"] = [5.0]
    with pytest.raises(ConfigError):
        parse_run_config(raw)
    raw = json.loads(config_path("case_i_increasing").read_text())
    raw["initial_data"]["x_max"] = -1.0
    with pytest.raises(ConfigError):
        parse_run_config(raw)


def test_overrides():
    """Test command line overrides"""
    config = load_run_config(config_path("case_ii_stopping"))
    changed = config.with_overrides(epsilon=1e-6, t_end=2.0, levels=3, output_dir="elsewhere")
    assert changed.epsilon == 1e-6
    assert changed.t_end == 2.0
    assert changed.snapshot_times == [0.0]
    assert changed.levels == 3
    assert changed.output_dir == "elsewhere"
    with pytest.raises(ConfigError):
        config.with_overrides(mode="3x3")


def test_tolerance_override():
    tuned = apply_tolerance_override(default_tolerances, {TOLERANCE_OVERRIDE_ENV: '{"tol_cluster": 1e-8}'})
    assert tuned.tol_cluster == 1e-8
    assert tuned.root_xtol == default_tolerances.root_xtol
    assert apply_tolerance_override(default_tolerances, {}) is default_tolerances
    for bad in ('{"nonsense": 1}', "[1, 2]", "{broken", '{"tol_cluster": -1}'):
        with pytest.raises(ConfigError):
            apply_tolerance_override(default_tolerances, {TOLERANCE_OVERRIDE_ENV: bad})


def test_default_tolerances():
    assert default_tolerances == ToleranceConfig()
    assert default_tolerances.tol_cluster == 1e-9
    assert default_tolerances.quad_abs_tol == 1e-10


def test_validate_config(tmp_path, capsys, monkeypatch):
    """Test configuration validation output"""
    monkeypatch.delenv(TOLERANCE_OVERRIDE_ENV, raising=False)
    assert validate_config(config_path("case_iii_constant_rho"))
    assert "✅" in capsys.readouterr().out
    broken = tmp_path / "broken.json"
    broken.write_text('{"epsilon": 1e-3}')
    assert not validate_config(broken)
    assert "❌" in capsys.readouterr().out


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
