"""Compact behavioral model of a single modified floating-gate cell.

The cell is a value object (threshold voltage, slope factor, prefactor,
noise envelope, stochastic stream seed). Readout follows the subthreshold
exponential law; program/erase pulses shift the threshold voltage with a
bias-dependent select factor and a seeded lognormal per-pulse variability.
All operations are pure: they return currents or new ``CellState`` values.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .config import DEFAULT_CONFIG, InhibitionParams, ModelConfig, NoiseParams
from .constants import (
    K_B,
    Q_E,
    T_MAX,
    T_MIN,
    V_CG_READ,
    V_D_READ,
    V_EG_READ,
    V_MAX_ABS,
    V_S_READ,
    V_WL_READ,
    thermal_voltage,
)

# below this select factor a pulse is treated as deterministic residue:
# the shift is orders of magnitude under the noise floor, so no
# variability draw is consumed (keeps doubly-unselected pulses cheap)
SF_DRAW_MIN = 1.0e-6

_READ_STREAM_TAG = 0x5EAD


class PulseKind(Enum):
    PROGRAM = "program"
    ERASE = "erase"


@dataclass(frozen=True)
class BiasCondition:
    """The five terminal voltages applied to a cell [V]."""

    v_wl: float
    v_cg: float
    v_d: float
    v_s: float
    v_eg: float

    def __post_init__(self):
        for name in ("v_wl", "v_cg", "v_d", "v_s", "v_eg"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            if abs(v) > V_MAX_ABS:
                raise ValueError(f"|{name}| = {abs(v):.3f} V exceeds {V_MAX_ABS} V")


READOUT_BIAS = BiasCondition(V_WL_READ, V_CG_READ, V_D_READ, V_S_READ, V_EG_READ)


@dataclass(frozen=True)
class PulseSpec:
    kind: PulseKind
    amplitude: float  # [V]
    duration: float  # [s]

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("pulse duration must be >= 0")
        if not (0 < self.amplitude <= V_MAX_ABS):
            raise ValueError("pulse amplitude must be in (0, 12] V")

    @classmethod
    def program(cls, cfg: ModelConfig = DEFAULT_CONFIG, duration: float = None):
        d = cfg.pulse.program_duration if duration is None else duration
        return cls(PulseKind.PROGRAM, cfg.pulse.program_amplitude, d)

    @classmethod
    def erase(cls, cfg: ModelConfig = DEFAULT_CONFIG, duration: float = None):
        d = cfg.pulse.erase_duration if duration is None else duration
        return cls(PulseKind.ERASE, cfg.pulse.erase_amplitude, d)


@dataclass(frozen=True)
class CellState:
    """Analog state of one floating-gate transistor."""

    v_th: float  # threshold voltage [V]
    n_slope: float  # subthreshold slope factor, dimensionless
    i0: float  # effective prefactor at zero gate overdrive [A]
    noise: NoiseParams
    rng_seed: int  # per-cell stochastic stream seed
    rng_count: int = 0  # stochastic draws consumed so far

    def __post_init__(self):
        if not math.isfinite(self.v_th):
            raise ValueError("v_th must be finite")
        if not (5.0 <= self.n_slope <= 5.1):
            raise ValueError("n_slope must lie in [5.0, 5.1]")
        if self.i0 <= 0:
            raise ValueError("i0 must be positive")


def fresh_cell(
    cfg: ModelConfig = DEFAULT_CONFIG, seed: int = 0, v_th: float = None
) -> CellState:
    """New cell at the given threshold (default: fully programmed)."""
    cal = cfg.require_calibration()
    if v_th is None:
        v_th = cal.v_th_max
    v_th = min(max(v_th, cal.v_th_min), cal.v_th_max)
    return CellState(
        v_th=v_th, n_slope=cfg.n, i0=cfg.i0, noise=cfg.noise, rng_seed=int(seed)
    )


# ------------------------------------------------------------- readout

def subthreshold_current(v_cg, v_th, n_slope, i0, temperature, i_sat):
    """Subthreshold drain current, clamped at the saturation ceiling [A].

    Broadcasts over numpy arrays; the gate overdrive enters as
    exp(q (v_cg - v_th) / (n kB T)).
    """
    x = Q_E * (np.asarray(v_cg) - np.asarray(v_th)) / (n_slope * K_B * temperature)
    return np.minimum(i0 * np.exp(x), i_sat)


def _check_temperature(temperature: float) -> None:
    if not (T_MIN <= temperature <= T_MAX):
        raise ValueError(
            f"temperature {temperature} K outside the model window "
            f"[{T_MIN}, {T_MAX}] K"
        )


def drain_current(
    cell: CellState,
    bias: BiasCondition,
    temperature: float,
    cfg: ModelConfig = DEFAULT_CONFIG,
) -> float:
    """Deterministic readout current [A]; zero when the word line is off."""
    _check_temperature(temperature)
    if bias.v_wl < cfg.wl_on_threshold:
        return 0.0
    return float(
        subthreshold_current(
            bias.v_cg, cell.v_th, cell.n_slope, cell.i0, temperature, cfg.i_sat
        )
    )


def readout_noisy(
    cell: CellState,
    bias: BiasCondition,
    temperature: float,
    samples: int,
    rng: np.random.Generator = None,
    cfg: ModelConfig = DEFAULT_CONFIG,
) -> float:
    """Mean of ``samples`` noisy current draws [A].

    Each draw multiplies the deterministic current by (1 + eps) with eps
    zero-mean Gaussian at the relative sigma of the cell's noise envelope.
    Without an explicit generator the draws come from a stream derived
    from the cell's seed and draw counter, so repeated calls on an
    unchanged cell repeat; pass a live generator for evolving
    measurements.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    ideal = drain_current(cell, bias, temperature, cfg)
    if ideal == 0.0:
        return 0.0
    sigma = cell.noise.sigma_at(ideal)
    if sigma == 0.0:
        return ideal
    if rng is None:
        rng = np.random.default_rng((cell.rng_seed, _READ_STREAM_TAG, cell.rng_count))
    mean = ideal * (1.0 + sigma * rng.standard_normal(samples)).mean()
    return max(mean, 1.0e-6 * ideal)


# ------------------------------------------------------------- pulses

def _logistic_select(v: float, v_full: float, v_inh: float, floor: float) -> float:
    """Normalized logistic pinned to 1 at ``v_full`` and ``floor`` at ``v_inh``."""
    span = math.log(1.0 / floor)
    s = (v_inh - v_full) / (2.0 * span)
    vm = v_full + s * span
    t = (v - vm) / s
    if t > 700.0:
        return 0.0
    return min((1.0 + floor) / (1.0 + math.exp(t)), 1.0)


def program_select_factor(bias: BiasCondition, inh: InhibitionParams) -> float:
    """Hot-electron injection efficiency under the given bias, in [0, 1].

    Injection needs a raised source line and a low bit line; raising the
    drain inhibits a half-selected cell.
    """
    f_bl = _logistic_select(bias.v_d, inh.program_bl_full, inh.program_bl_inhibit, inh.floor)
    f_sl = _logistic_select(bias.v_s, inh.program_sl_full, inh.program_sl_off, inh.floor)
    return f_bl * f_sl


def erase_select_factor(bias: BiasCondition, inh: InhibitionParams) -> float:
    """Tunneling-erase efficiency under the given bias, in [0, 1].

    Erase needs the high erase-gate voltage; a positive coupling-gate
    bias inhibits it in half-selected cells.
    """
    f_eg = _logistic_select(bias.v_eg, inh.erase_eg_full, inh.erase_eg_off, inh.floor)
    f_cg = _logistic_select(bias.v_cg, inh.erase_cg_full, inh.erase_cg_inhibit, inh.floor)
    return f_eg * f_cg


def pulse_shift(
    kind: PulseKind,
    v_th: float,
    rng_seed: int,
    rng_count: int,
    pulse: PulseSpec,
    bias: BiasCondition,
    cfg: ModelConfig,
):
    """Core pulse response shared by cell- and array-level operations.

    Returns (new v_th, new draw counter, applied signed shift). The shift
    scales linearly with pulse duration and amplitude relative to the
    configured nominals, times the bias select factor, times a seeded
    lognormal variability factor.
    """
    if pulse.duration == 0.0:
        return v_th, rng_count, 0.0
    cal = cfg.require_calibration()
    if kind is PulseKind.PROGRAM:
        sf = program_select_factor(bias, cfg.inhibition)
        nominal = cal.dv_program_nominal
        scale = (pulse.duration / cfg.pulse.program_duration) * (
            pulse.amplitude / cfg.pulse.program_amplitude
        )
        sign = 1.0
        limit = cal.v_th_max
    else:
        sf = erase_select_factor(bias, cfg.inhibition)
        nominal = cal.dv_erase_nominal
        scale = (pulse.duration / cfg.pulse.erase_duration) * (
            pulse.amplitude / cfg.pulse.erase_amplitude
        )
        sign = -1.0
        limit = cal.v_th_min

    magnitude = nominal * scale * sf
    sigma = cfg.pulse.variability_sigma
    if sf >= SF_DRAW_MIN and sigma > 0.0:
        z = np.random.default_rng((rng_seed, rng_count)).standard_normal()
        magnitude *= math.exp(sigma * z)
        rng_count += 1

    new_vth = v_th + sign * magnitude
    if sign > 0:
        new_vth = min(new_vth, limit)
    else:
        new_vth = max(new_vth, limit)
    return new_vth, rng_count, new_vth - v_th


def apply_program_pulse(
    cell: CellState,
    pulse: PulseSpec,
    bias: BiasCondition,
    cfg: ModelConfig = DEFAULT_CONFIG,
) -> CellState:
    """Raise v_th by the inhibition-weighted shift (readout current drops)."""
    if pulse.kind is not PulseKind.PROGRAM:
        raise ValueError("apply_program_pulse requires a program pulse")
    if pulse.duration == 0.0:
        return cell
    v_th, count, _ = pulse_shift(
        PulseKind.PROGRAM, cell.v_th, cell.rng_seed, cell.rng_count, pulse, bias, cfg
    )
    return replace(cell, v_th=v_th, rng_count=count)


def apply_erase_pulse(
    cell: CellState,
    pulse: PulseSpec,
    bias: BiasCondition,
    cfg: ModelConfig = DEFAULT_CONFIG,
) -> CellState:
    """Lower v_th by the inhibition-weighted shift (readout current rises)."""
    if pulse.kind is not PulseKind.ERASE:
        raise ValueError("apply_erase_pulse requires an erase pulse")
    if pulse.duration == 0.0:
        return cell
    v_th, count, _ = pulse_shift(
        PulseKind.ERASE, cell.v_th, cell.rng_seed, cell.rng_count, pulse, bias, cfg
    )
    return replace(cell, v_th=v_th, rng_count=count)


def retention_hold(
    cell: CellState,
    duration: float,
    temperature: float,
    cfg: ModelConfig = DEFAULT_CONFIG,
) -> CellState:
    """Hold the cell for ``duration`` seconds at ``temperature``.

    The default model has no deterministic drift: the stored state is
    stable over a one-day bake within the read-noise floor. When the
    random-walk option is configured, v_th performs a seeded walk sized
    so the per-day relative current deviation tracks the noise envelope.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    _check_temperature(temperature)
    if duration == 0.0 or not cfg.retention.random_walk:
        return cell
    cal = cfg.require_calibration()
    current = drain_current(cell, READOUT_BIAS, temperature, cfg)
    sigma_rel = (
        cfg.retention.sigma_scale
        * cell.noise.sigma_at(current)
        * math.sqrt(duration / 86400.0)
    )
    dv_sigma = sigma_rel * cell.n_slope * thermal_voltage(temperature)
    z = np.random.default_rng((cell.rng_seed, cell.rng_count)).standard_normal()
    v_th = min(max(cell.v_th + dv_sigma * z, cal.v_th_min), cal.v_th_max)
    return replace(cell, v_th=v_th, rng_count=cell.rng_count + 1)


# ------------------------------------------------------- state helpers

def vth_for_standard_current(
    current: float, cfg: ModelConfig = DEFAULT_CONFIG, temperature: float = None
) -> float:
    """Threshold voltage that reads ``current`` at the standard bias [V]."""
    if current <= 0:
        raise ValueError("current must be positive")
    t = cfg.temperature_ref if temperature is None else temperature
    return V_CG_READ - cfg.n * thermal_voltage(t) * math.log(current / cfg.i0)


def standard_current(
    v_th: float, cfg: ModelConfig = DEFAULT_CONFIG, temperature: float = None
) -> float:
    """Readout current at the standard bias for a threshold voltage [A]."""
    t = cfg.temperature_ref if temperature is None else temperature
    return float(
        subthreshold_current(V_CG_READ, v_th, cfg.n, cfg.i0, t, cfg.i_sat)
    )
