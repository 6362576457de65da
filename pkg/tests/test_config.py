import math

import pytest

from flashvmm.config import (
    DEFAULT_CONFIG,
    CalibrationError,
    ModelConfig,
    NoiseParams,
    calibrate,
    config_hash,
    load_config,
    save_config,
)
from flashvmm.constants import V_CG_READ, thermal_voltage


def test_noise_invariants():
    with pytest.raises(ValueError):
        NoiseParams(sigma_low=0.01, sigma_high=0.04)  # ordered wrong
    with pytest.raises(ValueError):
        NoiseParams(sigma_low=0.2)  # above the 10% cap
    with pytest.raises(ValueError):
        NoiseParams(i_low_anchor=1e-8, i_high_anchor=1e-10)


def test_noise_interpolation_anchors_and_midpoint():
    noise = NoiseParams()
    assert noise.sigma_at(1e-10) == pytest.approx(0.04)
    assert noise.sigma_at(1e-8) == pytest.approx(0.0095)
    # constant outside the anchors
    assert noise.sigma_at(1e-12) == pytest.approx(0.04)
    assert noise.sigma_at(1e-6) == pytest.approx(0.0095)
    # log midpoint of (1e-10, 1e-8) is 1e-9: linear midpoint of the sigmas
    assert noise.sigma_at(1e-9) == pytest.approx(0.02475, rel=1e-12)


def test_calibration_window_maps_current_range():
    cfg = DEFAULT_CONFIG
    cal = cfg.calibration
    ut = cfg.n * thermal_voltage(cfg.temperature_ref)
    lo = cfg.i0 * math.exp((V_CG_READ - cal.v_th_max) / ut)
    hi = cfg.i0 * math.exp((V_CG_READ - cal.v_th_min) / ut)
    assert lo == pytest.approx(cfg.current_window[0], rel=1e-2)
    assert hi == pytest.approx(cfg.current_window[1], rel=1e-2)
    assert cal.dv_program_nominal == pytest.approx(
        cal.window_width / cfg.traversal_pulses, rel=1e-12
    )


def test_calibration_resolves_slope_factor_in_range():
    assert 5.0 <= DEFAULT_CONFIG.n <= 5.1


def test_calibration_idempotent():
    once = calibrate(ModelConfig())
    twice = calibrate(once)
    assert once == twice
    assert config_hash(once) == config_hash(twice)


def test_calibration_rejects_infeasible_prefactor():
    # i0 = 0.1 mA keeps the window valid but the 1 nA warm-up ratio at ~6.9x
    with pytest.raises(CalibrationError, match="temperature-ratio"):
        calibrate(ModelConfig(i0=1e-4))
    with pytest.raises(CalibrationError, match="prefactor regime"):
        calibrate(ModelConfig(i0=1e-8, current_window=(1e-12, 1e-8), i_sat=1e-8))


def test_calibration_rejects_traversal_outside_design_range():
    with pytest.raises(CalibrationError, match="traversal"):
        calibrate(ModelConfig(traversal_pulses=5))


def test_unresolved_slope_factor_blocks_use():
    cfg = ModelConfig()
    with pytest.raises(ValueError, match="resolved"):
        _ = cfg.n
    with pytest.raises(ValueError, match="calibrated"):
        cfg.require_calibration()


def test_yaml_roundtrip(tmp_path):
    cfg = calibrate(ModelConfig(seed=777, traversal_pulses=30))
    path = tmp_path / "cfg.yaml"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded == cfg
    assert config_hash(loaded) == config_hash(cfg)
    text = path.read_text()
    assert "derived by calibrate()" in text  # provenance comment survives


def test_config_hash_tracks_parameters():
    base = calibrate(ModelConfig())
    other = calibrate(ModelConfig(seed=999))
    assert config_hash(base) != config_hash(other)


def test_current_window_validation():
    with pytest.raises(ValueError):
        ModelConfig(current_window=(1e-6, 1e-10))
    with pytest.raises(ValueError):
        ModelConfig(i_sat=1e-8)  # below window top
