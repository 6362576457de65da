"""Closed-loop write-verify tuning.

The tuner alternates program and erase pulses under run-time readout
control: after each averaged read it picks the pulse direction from the
sign of the error and sizes the pulse by scaling its duration, with a
proportional step bounded by a geometric back-off cap that halves on
overshoot. Convergence is decided on a 128-sample averaged readout.
"""

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np
import yaml

from .array import ArrayState
from .cell import PulseSpec
from .config import ModelConfig
from .constants import thermal_voltage

VERIFY_SAMPLES = 128  # deciding readout averaging
TRACK_SAMPLES = 8  # intermediate readout averaging
MIN_SCALE = 1.0 / 64.0  # duration scaling floor


@dataclass(frozen=True)
class TuneTarget:
    row: int
    col: int
    target_current: float  # [A]
    precision: float  # relative tolerance

    def __post_init__(self):
        if self.target_current <= 0:
            raise ValueError("target current must be positive")
        if not (0.0 < self.precision <= 0.5):
            raise ValueError("precision must lie in (0, 0.5]")


@dataclass
class TuneResult:
    row: int
    col: int
    target_current: float
    converged: bool
    pulses_used: dict  # {"program": n, "erase": m}
    final_current: float  # deciding (or last verification) readout [A]
    relative_error: float
    trajectory: list = None  # optional [(pulse index, current), ...]

    @property
    def pulses_total(self) -> int:
        return sum(self.pulses_used.values())


def tune_cell(
    array: ArrayState,
    target: TuneTarget,
    budget: int,
    record_trajectory: bool = False,
) -> TuneResult:
    """Drive one cell to its target current within the pulse budget.

    Budget exhaustion yields a non-converged result, not an exception.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cfg = array.cfg
    cal = cfg.require_calibration()
    lo, hi = cfg.current_window
    if not (lo <= target.target_current <= hi):
        raise ValueError(
            f"target {target.target_current:.3e} A outside the tunable window"
        )
    row, col = target.row, target.col
    goal = target.target_current
    ut = cfg.n * thermal_voltage(cfg.temperature_ref)

    pulses = {"program": 0, "erase": 0}
    trajectory = [] if record_trajectory else None
    used = 0
    cap = 1.0
    last_sign = 0
    last_clamped = False

    while True:
        current = array.read_cell(row, col, noisy=True, samples=TRACK_SAMPLES)
        if trajectory is not None:
            trajectory.append((used, current))
        err = current / goal - 1.0
        if abs(err) <= target.precision:
            final = array.read_cell(row, col, noisy=True, samples=VERIFY_SAMPLES)
            final_err = final / goal - 1.0
            if abs(final_err) <= target.precision:
                return TuneResult(
                    row, col, goal, True, pulses, final, abs(final_err), trajectory
                )
            current, err = final, final_err  # verification disagreed; keep going
        if used >= budget:
            final = array.read_cell(row, col, noisy=True, samples=VERIFY_SAMPLES)
            return TuneResult(
                row, col, goal, False, pulses, final, abs(final / goal - 1.0), trajectory
            )

        # too much current -> program (raise v_th); too little -> erase
        sign = 1 if err > 0 else -1
        if last_sign != 0 and sign != last_sign:
            cap = MIN_SCALE if last_clamped else max(cap / 2.0, MIN_SCALE)
        if sign > 0:
            nominal_dv = cal.dv_program_nominal
        else:
            nominal_dv = cal.dv_erase_nominal
        needed = abs(math.log1p(err)) * ut / nominal_dv
        scale = min(cap, max(needed, MIN_SCALE))
        if sign > 0:
            pulse = PulseSpec.program(cfg, duration=cfg.pulse.program_duration * scale)
            pulses["program"] += 1
        else:
            pulse = PulseSpec.erase(cfg, duration=cfg.pulse.erase_duration * scale)
            pulses["erase"] += 1
        delta = array.pulse_cell(row, col, pulse)
        last_clamped = delta.dvth[row, col] == 0.0
        last_sign = sign
        used += 1


def tune_array(
    array: ArrayState,
    targets,
    budget: int,
    record_trajectory: bool = False,
):
    """Tune the listed cells one by one; returns (results, summary stats)."""
    targets = list(targets)
    seen = {}
    for t in targets:
        key = (t.row, t.col)
        if key in seen:
            raise ValueError(f"conflicting targets for cell {key}")
        seen[key] = t
    results = [
        tune_cell(array, t, budget, record_trajectory=record_trajectory)
        for t in targets
    ]
    errors = [r.relative_error for r in results]
    summary = {
        "targets": len(results),
        "converged": sum(r.converged for r in results),
        "pulses_total": sum(r.pulses_total for r in results),
        "rel_error_max": max(errors) if errors else 0.0,
        "rel_error_mean": float(np.mean(errors)) if errors else 0.0,
    }
    return results, summary


# ------------------------------------------------------- target builders

def uniform_targets(array: ArrayState, current: float, precision: float) -> list:
    """One target per non-peripheral cell, row-major."""
    return [
        TuneTarget(r, c, current, precision)
        for r in range(array.rows)
        for c in array.array_cols
    ]


def ramp_targets(array: ArrayState, lo: float, hi: float, precision: float) -> list:
    """Geometric current ramp over the cell number, row-major."""
    cols = array.array_cols
    count = array.rows * len(cols)
    if count < 2:
        raise ValueError("ramp needs at least two cells")
    ratio = hi / lo
    targets = []
    k = 0
    for r in range(array.rows):
        for c in cols:
            targets.append(TuneTarget(r, c, lo * ratio ** (k / (count - 1)), precision))
            k += 1
    return targets


# ---------------------------------------------------------- campaign I/O

@dataclass(frozen=True)
class TuningCampaign:
    rows: int = 10
    cols: int = 12
    precision: float = 0.05
    budget: int = 100
    seed: int = None  # overrides the config seed when given
    initial: str = "programmed"
    targets: dict = None  # {"kind": "ramp"|"uniform"|"explicit", ...}


def load_campaign(path) -> TuningCampaign:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return TuningCampaign(**raw)


def campaign_targets(campaign: TuningCampaign, array: ArrayState) -> list:
    spec = campaign.targets or {"kind": "ramp", "lo": 1.0e-10, "hi": 1.0e-6}
    kind = spec.get("kind", "explicit")
    if kind == "uniform":
        return uniform_targets(array, float(spec["current"]), campaign.precision)
    if kind == "ramp":
        return ramp_targets(
            array, float(spec["lo"]), float(spec["hi"]), campaign.precision
        )
    if kind == "explicit":
        return [
            TuneTarget(int(r), int(c), float(cur), campaign.precision)
            for r, c, cur in spec["cells"]
        ]
    raise ValueError(f"unknown target kind {kind!r}")


def run_campaign(cfg: ModelConfig, campaign: TuningCampaign):
    """Build a fresh array and run the campaign; returns (array, results, summary)."""
    if campaign.seed is not None:
        cfg = dc_replace(cfg, seed=int(campaign.seed))
    array = ArrayState.fresh(
        cfg, rows=campaign.rows, cols=campaign.cols, initial=campaign.initial
    )
    targets = campaign_targets(campaign, array)
    results, summary = tune_array(array, targets, campaign.budget)
    return array, results, summary


def results_to_csv(results, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,target,final,rel_error,pulses,converged\n")
        for r in results:
            fh.write(
                f"{r.row},{r.col},{r.target_current!r},{r.final_current!r},"
                f"{r.relative_error!r},{r.pulses_total},{int(r.converged)}\n"
            )
