"""Model configuration: parameter blocks, YAML round-trip, calibration.

A config is usable by the simulator once it carries a ``Calibration``
block (threshold-voltage window and nominal per-pulse shifts). The
``calibrate`` function derives that block from the base parameters and
verifies the feasibility targets; it is idempotent.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from .constants import T_25C, T_85C, V_CG_READ, thermal_voltage


class CalibrationError(ValueError):
    """Raised when the calibration targets cannot all be met."""


@dataclass(frozen=True)
class NoiseParams:
    """Relative read-noise envelope, log-linear in current between anchors."""

    sigma_low: float = 0.04  # relative r.m.s. at the low-current anchor
    sigma_high: float = 0.0095  # stays below the 1% bound at and above the anchor
    i_low_anchor: float = 1.0e-10  # [A]
    i_high_anchor: float = 1.0e-8  # [A]

    def __post_init__(self):
        if not (0.0 <= self.sigma_high <= self.sigma_low <= 0.10):
            raise ValueError(
                "noise sigmas must satisfy 0 <= sigma_high <= sigma_low <= 0.10"
            )
        if not (0.0 < self.i_low_anchor < self.i_high_anchor):
            raise ValueError("noise anchors must be positive and ordered")

    def sigma_at(self, current):
        """Relative r.m.s. at the given current, constant outside the anchors.

        Log-linear in current between the anchors; broadcasts over arrays.
        """
        sigma = np.interp(
            np.log(current),
            (math.log(self.i_low_anchor), math.log(self.i_high_anchor)),
            (self.sigma_low, self.sigma_high),
        )
        return float(sigma) if np.ndim(current) == 0 else sigma


@dataclass(frozen=True)
class PulseDefaults:
    program_amplitude: float = 4.5  # [V]
    program_duration: float = 10.0e-6  # [s]
    erase_amplitude: float = 11.5  # [V]
    erase_duration: float = 0.5e-3  # [s]
    variability_sigma: float = 0.30  # lognormal sigma of the per-pulse shift

    def __post_init__(self):
        if self.program_duration < 0 or self.erase_duration < 0:
            raise ValueError("pulse durations must be >= 0")
        if self.variability_sigma < 0:
            raise ValueError("variability_sigma must be >= 0")


@dataclass(frozen=True)
class InhibitionParams:
    """Two-point fits of the half-select inhibition curves.

    Each curve is a normalized logistic pinned to 1.0 at the full-select
    voltage and to ``floor`` at the documented inhibit voltage.
    """

    floor: float = 1.0e-4
    program_bl_full: float = 0.5  # selected bit line [V]
    program_bl_inhibit: float = 2.25  # unselected bit lines held at or above [V]
    program_sl_full: float = 4.5  # selected source line [V]
    program_sl_off: float = 0.5  # unselected source lines [V]
    erase_eg_full: float = 11.5  # selected erase-gate column [V]
    erase_eg_off: float = 0.0
    erase_cg_full: float = 0.0  # selected row's coupling gate grounded [V]
    erase_cg_inhibit: float = 8.0  # unselected rows' coupling gates [V]

    def __post_init__(self):
        if not (0.0 < self.floor < 1.0):
            raise ValueError("inhibition floor must be in (0, 1)")


@dataclass(frozen=True)
class RetentionParams:
    """Optional random-walk state drift; disabled by default.

    When enabled, the per-day threshold-voltage walk is sized so the
    resulting relative current deviation stays at ``sigma_scale`` times
    the read-noise envelope at the cell's current.
    """

    random_walk: bool = False
    sigma_scale: float = 1.0


@dataclass(frozen=True)
class Calibration:
    """Derived quantities; produced by ``calibrate``."""

    v_th_min: float  # [V], fully-erased bound (highest current)
    v_th_max: float  # [V], fully-programmed bound (lowest current)
    dv_program_nominal: float  # [V] per nominal program pulse
    dv_erase_nominal: float  # [V] per nominal erase pulse

    def __post_init__(self):
        if not (self.v_th_min < self.v_th_max):
            raise ValueError("v_th window is empty")
        if self.dv_program_nominal <= 0 or self.dv_erase_nominal <= 0:
            raise ValueError("nominal pulse shifts must be positive")

    @property
    def v_th_center(self) -> float:
        return 0.5 * (self.v_th_min + self.v_th_max)

    @property
    def window_width(self) -> float:
        return self.v_th_max - self.v_th_min


@dataclass(frozen=True)
class ModelConfig:
    seed: int = 12345
    i0: float = 1.0e-3  # effective prefactor [A]
    n_slope: object = (5.0, 5.1)  # scalar, or (lo, hi) resolved by calibrate
    i_sat: float = 1.0e-6  # saturation ceiling [A]
    wl_on_threshold: float = 1.0  # word-line pass switch [V]
    temperature_ref: float = T_25C  # [K]
    current_window: tuple = (1.0e-10, 1.0e-6)  # tunable range at standard bias [A]
    traversal_pulses: int = 20  # nominal pulses across the full window
    pulse: PulseDefaults = field(default_factory=PulseDefaults)
    noise: NoiseParams = field(default_factory=NoiseParams)
    inhibition: InhibitionParams = field(default_factory=InhibitionParams)
    retention: RetentionParams = field(default_factory=RetentionParams)
    calibration: Calibration = None

    def __post_init__(self):
        if self.i0 <= 0:
            raise ValueError("i0 must be positive")
        lo, hi = self.current_window
        if not (0.0 < lo < hi):
            raise ValueError("current_window must be positive and ordered")
        if self.i_sat < hi:
            raise ValueError("i_sat must be at or above the current window top")

    @property
    def n(self) -> float:
        """Resolved slope factor; requires a calibrated config."""
        if not isinstance(self.n_slope, (int, float)):
            raise ValueError("n_slope range not resolved; run calibrate() first")
        return float(self.n_slope)

    @property
    def calibrated(self) -> bool:
        return self.calibration is not None

    def require_calibration(self) -> Calibration:
        if self.calibration is None:
            raise ValueError("config is not calibrated; run calibrate() first")
        return self.calibration


def _resolve_n_slope(cfg: ModelConfig) -> float:
    if isinstance(cfg.n_slope, (int, float)):
        return float(cfg.n_slope)
    lo, hi = (float(v) for v in cfg.n_slope)
    if not (lo <= hi):
        raise CalibrationError("n_slope range must be ordered")
    u = np.random.default_rng((int(cfg.seed), 0x6E)).random()
    return lo + u * (hi - lo)


def calibrate(cfg: ModelConfig) -> ModelConfig:
    """Derive the threshold window and nominal pulse shifts.

    Solves for the v_th window that maps the tunable current range onto
    the standard readout bias at the reference temperature, sizes the
    nominal per-pulse shift for a full-window traversal in
    ``traversal_pulses`` pulses, and verifies the >10x warm-up ratio of
    a 1 nA cell between 25 and 85 C. Idempotent: calibrating an already
    calibrated config returns an equal config.
    """
    n = _resolve_n_slope(cfg)
    if not (5.0 <= n <= 5.1):
        raise CalibrationError(f"slope factor {n:.4f} outside [5.0, 5.1]")
    if not (20 <= cfg.traversal_pulses <= 60):
        raise CalibrationError(
            f"traversal_pulses={cfg.traversal_pulses} outside the 20..60 design range"
        )

    i_lo, i_hi = cfg.current_window
    ut = n * thermal_voltage(cfg.temperature_ref)
    v_th_max = V_CG_READ - ut * math.log(i_lo / cfg.i0)
    v_th_min = V_CG_READ - ut * math.log(i_hi / cfg.i0)
    if v_th_min <= V_CG_READ:
        raise CalibrationError(
            "window top current reaches the prefactor regime: raise i0 or lower "
            "the current window"
        )

    width = v_th_max - v_th_min
    dv = width / cfg.traversal_pulses

    # warm-up feasibility: I(85C)/I(25C) = (I/i0)**(T1/T2 - 1) at I = 1 nA
    ratio = (1.0e-9 / cfg.i0) ** (T_25C / T_85C - 1.0)
    if ratio < 10.0:
        raise CalibrationError(
            f"temperature-ratio target violated: I(85C)/I(25C) = {ratio:.3f} < 10 "
            "for a 1 nA cell; increase i0"
        )

    cal = Calibration(
        v_th_min=v_th_min,
        v_th_max=v_th_max,
        dv_program_nominal=dv,
        dv_erase_nominal=dv,
    )
    return replace(cfg, n_slope=n, calibration=cal)


# ---------------------------------------------------------------- file I/O

def _to_plain(cfg: ModelConfig) -> dict:
    d = asdict(cfg)
    d["current_window"] = list(cfg.current_window)
    if not isinstance(cfg.n_slope, (int, float)):
        d["n_slope"] = list(cfg.n_slope)
    return d


def config_hash(cfg: ModelConfig) -> str:
    """Stable 12-hex-digit digest of the full parameter set."""
    blob = json.dumps(_to_plain(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_config(path) -> ModelConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ModelConfig:
    kwargs = dict(raw)
    for key, cls in (
        ("pulse", PulseDefaults),
        ("noise", NoiseParams),
        ("inhibition", InhibitionParams),
        ("retention", RetentionParams),
        ("calibration", Calibration),
    ):
        if kwargs.get(key) is not None:
            kwargs[key] = cls(**kwargs[key])
    if "current_window" in kwargs:
        kwargs["current_window"] = tuple(kwargs["current_window"])
    if isinstance(kwargs.get("n_slope"), list):
        kwargs["n_slope"] = tuple(kwargs["n_slope"])
    return ModelConfig(**kwargs)


def save_config(cfg: ModelConfig, path) -> None:
    """Write the config as YAML; derived fields carry provenance comments."""
    d = _to_plain(cfg)
    cal = d.pop("calibration", None)
    text = yaml.safe_dump(d, sort_keys=True, default_flow_style=None)
    if cal is not None:
        lines = [
            "calibration:",
            "  # derived by calibrate(): window maps current_window onto the",
            "  # standard readout bias at temperature_ref; dv nominals give a",
            f"  # full-window traversal in {cfg.traversal_pulses} pulses",
        ]
        for key in ("v_th_min", "v_th_max", "dv_program_nominal", "dv_erase_nominal"):
            lines.append(f"  {key}: {cal[key]!r}")
        text += "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


DEFAULT_CONFIG = calibrate(ModelConfig())
