"""Gate-coupled vector-by-matrix multiplication.

Each row's input current is converted to a coupling-gate voltage by the
row's peripheral cell; every array cell then mirrors that current scaled
by the exponential of its threshold-voltage offset, and columns sum by
current addition. Includes the differential weight construction
(w_b + w/2, w_b - w/2) with bias-weight optimization that minimizes the
worst-case output drift over a temperature interval.
"""

import math
from dataclasses import dataclass

import numpy as np

from .array import ArrayState
from .cell import CellState, subthreshold_current
from .config import DEFAULT_CONFIG, ModelConfig
from .constants import thermal_voltage
from .tuning import TuneTarget

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class PlanInfeasibleError(ValueError):
    """Raised when weight entries cannot be realized; carries (row, col) list."""

    def __init__(self, entries):
        self.entries = list(entries)
        super().__init__(f"infeasible weight entries at {self.entries}")


@dataclass(frozen=True)
class WeightMatrix:
    """Dimensionless weights; entry [j, i] couples input row j to column i."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise ValueError("weights must be a 2-D matrix")
        if not np.all((vals > 0.0) & (vals <= 1.0)):
            raise ValueError("weights must lie in (0, 1]")

    @property
    def shape(self):
        return self.values.shape


def load_weights_csv(path) -> WeightMatrix:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(x) for x in line.split(",")])
    return WeightMatrix(np.array(rows))


# ------------------------------------------------------- basic operations

def input_gate_voltage(
    peripheral: CellState,
    input_current: float,
    temperature: float,
    cfg: ModelConfig = DEFAULT_CONFIG,
) -> float:
    """Coupling-gate voltage at which the peripheral cell carries the input [V]."""
    lo, hi = cfg.current_window
    if not (lo <= input_current <= hi):
        raise ValueError(
            f"input current {input_current:.3e} A outside the validity window "
            f"[{lo:.0e}, {hi:.0e}] A"
        )
    ut = peripheral.n_slope * thermal_voltage(temperature)
    return peripheral.v_th + ut * math.log(input_current / peripheral.i0)


def weight_of(
    array_cell: CellState, peripheral: CellState, temperature: float
) -> float:
    """Current-mirror ratio set by the threshold-voltage difference."""
    if abs(array_cell.n_slope - peripheral.n_slope) > 1e-12:
        raise ValueError("gate-coupled cells must share the slope factor")
    ut = peripheral.n_slope * thermal_voltage(temperature)
    return math.exp((peripheral.v_th - array_cell.v_th) / ut)


def _check_peripherals(array: ArrayState):
    cal = array.cfg.require_calibration()
    eps = 1e-9
    for r in range(array.rows):
        pc = array.peripheral_col_for_row(r)
        v = array.v_th[r, pc]
        if not (cal.v_th_min + eps < v < cal.v_th_max - eps):
            raise ValueError(
                f"peripheral cell ({r}, {pc}) is untuned (v_th at a window bound)"
            )


def multiply(
    array: ArrayState,
    inputs,
    temperature: float = None,
    noisy: bool = False,
    samples: int = 1,
    rng: np.random.Generator = None,
) -> np.ndarray:
    """Output current per array column [A].

    ``inputs`` holds one current per row. With ``noisy`` each cell current
    receives its relative noise draw (averaged over ``samples``); draws
    come from ``rng`` or, when omitted, the array's measurement stream.
    """
    cfg = array.cfg
    t = cfg.temperature_ref if temperature is None else temperature
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape != (array.rows,):
        raise ValueError(f"expected {array.rows} input currents, got {inputs.shape}")
    lo, hi = cfg.current_window
    if np.any(inputs < lo) or np.any(inputs > hi):
        raise ValueError("input currents outside the validity window")
    _check_peripherals(array)

    per_cols = np.array([array.peripheral_col_for_row(r) for r in range(array.rows)])
    rows_idx = np.arange(array.rows)
    vth_p = array.v_th[rows_idx, per_cols]
    n_p = array.n_slope[rows_idx, per_cols]
    i0_p = array.i0[rows_idx, per_cols]
    v_gate = vth_p + n_p * thermal_voltage(t) * np.log(inputs / i0_p)

    cols = array.array_cols
    currents = subthreshold_current(
        v_gate[:, None],
        array.v_th[:, cols],
        array.n_slope[:, cols],
        array.i0[:, cols],
        t,
        cfg.i_sat,
    )
    if noisy:
        if rng is None:
            rng = array.measure_rng
        sigma = cfg.noise.sigma_at(currents)
        eps_mean = rng.standard_normal((samples,) + currents.shape).mean(axis=0)
        currents = np.maximum(currents * (1.0 + sigma * eps_mean), 0.0)
    return currents.sum(axis=0)


# ------------------------------------------------- temperature behavior

def weight_at_temperature(w_ref: float, t_ref: float, t: float) -> float:
    """Constant-slope-factor scaling law: ln w(t) = ln w(t_ref) * t_ref/t."""
    return math.exp(math.log(w_ref) * t_ref / t)


def differential_drift(
    w_plus: float, w_minus: float, temp_range, reference: float, step: float = 1.0
) -> float:
    """Worst-case relative drift of w+ - w- over the interval (analytic)."""
    a, b = math.log(w_plus), math.log(w_minus)
    temps = np.arange(temp_range[0], temp_range[1] + step / 2, step)
    out = np.exp(a * reference / temps) - np.exp(b * reference / temps)
    out0 = math.exp(a) - math.exp(b)
    return float(np.max(np.abs(out / out0 - 1.0)))


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-6):
    """Scalar golden-section minimizer; returns (argmin, min)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimize_bias_weight(
    w: float,
    temp_range,
    reference: float = None,
    w_floor: float = 0.01,
    cfg: ModelConfig = DEFAULT_CONFIG,
):
    """Bias weight minimizing worst-case differential drift; returns (w_b, drift).

    The objective is the maximum relative deviation of w+ - w- from its
    reference-temperature value on a 1 K grid, scanned on a coarse
    bias-weight grid and refined by golden section. The floor keeps
    w_minus realizable within the tunable window.
    """
    if not (0.0 <= w < 1.0):
        raise ValueError("differential construction requires 0 <= w < 1")
    t_lo, t_hi = temp_range
    if not (t_lo < t_hi):
        raise ValueError("temperature range must be ordered")
    t0 = t_lo if reference is None else reference
    if w == 0.0:
        return 0.5, 0.0

    lo = w / 2.0 + w_floor
    hi = 1.0 - w / 2.0
    if lo >= hi:
        raise ValueError(f"no feasible bias weight for w={w} with floor {w_floor}")

    def objective(w_b):
        return differential_drift(w_b + w / 2.0, w_b - w / 2.0, temp_range, t0)

    grid = np.arange(lo, hi + 1e-12, 1e-3)
    values = [objective(x) for x in grid]
    k = int(np.argmin(values))
    bracket_lo = grid[max(k - 1, 0)]
    bracket_hi = grid[min(k + 1, len(grid) - 1)]
    w_b, drift = golden_section_min(objective, bracket_lo, bracket_hi, tol=1e-6)
    return float(w_b), float(drift)


# ---------------------------------------------------- differential plan

@dataclass
class DifferentialWeightPlan:
    """Per-logical-weight pair assignments and tuning targets."""

    weights: np.ndarray  # desired net weights, rows x logical columns
    w_b: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    predicted_drift: np.ndarray
    column_pairs: list  # logical column -> (physical plus col, physical minus col)
    target_plus: np.ndarray  # standard-bias cell currents [A]
    target_minus: np.ndarray
    peripheral_target: float  # reference current of peripheral cells [A]
    temp_range: tuple
    reference: float

    def tune_targets(self, array: ArrayState, precision: float) -> list:
        """Targets for every plan cell plus the used peripheral cells."""
        rows, logical = self.weights.shape
        if rows != array.rows:
            raise ValueError("plan rows do not match the array")
        targets = [
            TuneTarget(r, array.peripheral_col_for_row(r), self.peripheral_target, precision)
            for r in range(rows)
        ]
        for m, (cp, cm) in enumerate(self.column_pairs):
            for r in range(rows):
                targets.append(TuneTarget(r, cp, float(self.target_plus[r, m]), precision))
                targets.append(TuneTarget(r, cm, float(self.target_minus[r, m]), precision))
        return targets

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                "row,logical_col,w,w_b,w_plus,w_minus,predicted_drift,"
                "col_plus,col_minus,target_plus,target_minus\n"
            )
            rows, logical = self.weights.shape
            for m in range(logical):
                cp, cm = self.column_pairs[m]
                for r in range(rows):
                    fh.write(
                        f"{r},{m},{float(self.weights[r, m])!r},"
                        f"{float(self.w_b[r, m])!r},"
                        f"{float(self.w_plus[r, m])!r},{float(self.w_minus[r, m])!r},"
                        f"{float(self.predicted_drift[r, m])!r},{cp},{cm},"
                        f"{float(self.target_plus[r, m])!r},"
                        f"{float(self.target_minus[r, m])!r}\n"
                    )


def reference_current(cfg: ModelConfig) -> float:
    """Standard-bias current of a center-of-window cell [A]."""
    lo, hi = cfg.current_window
    return math.sqrt(lo * hi)


def plan_differential(
    weights,
    temp_range,
    array: ArrayState,
    reference: float = None,
    w_floor: float = None,
) -> DifferentialWeightPlan:
    """Assign column pairs and optimized (w+, w-) targets for net weights.

    Peripheral cells sit at the window center, so a weight w maps to a
    standard-bias cell current of w times the center current. Entries
    that cannot be realized (w = 1 leaves no room for the pair, or
    w_minus would fall below the window) are reported together.
    """
    if isinstance(weights, WeightMatrix):
        wvals = weights.values
    else:
        wvals = np.asarray(weights, dtype=float)
        if wvals.ndim != 2:
            raise ValueError("weights must be a 2-D matrix")
    cfg = array.cfg
    rows, logical = wvals.shape
    if rows != array.rows:
        raise ValueError(f"weight matrix has {rows} rows, array has {array.rows}")
    cols = array.array_cols
    if 2 * logical > len(cols):
        raise ValueError(
            f"{logical} logical columns need {2 * logical} array columns, "
            f"have {len(cols)}"
        )
    lo_cur, hi_cur = cfg.current_window
    i_ref = reference_current(cfg)
    if w_floor is None:
        w_floor = lo_cur / i_ref

    t0 = temp_range[0] if reference is None else reference
    w_b = np.zeros_like(wvals)
    drift = np.zeros_like(wvals)
    bad = []
    for r in range(rows):
        for m in range(logical):
            w = wvals[r, m]
            if not (0.0 < w < 1.0):
                bad.append((r, m))
                continue
            try:
                w_b[r, m], drift[r, m] = optimize_bias_weight(
                    w, temp_range, reference=t0, w_floor=w_floor, cfg=cfg
                )
            except ValueError:
                bad.append((r, m))
    if bad:
        raise PlanInfeasibleError(bad)

    w_plus = w_b + wvals / 2.0
    w_minus = w_b - wvals / 2.0
    pairs = [(cols[2 * m], cols[2 * m + 1]) for m in range(logical)]
    return DifferentialWeightPlan(
        weights=wvals,
        w_b=w_b,
        w_plus=w_plus,
        w_minus=w_minus,
        predicted_drift=drift,
        column_pairs=pairs,
        target_plus=i_ref * w_plus,
        target_minus=i_ref * w_minus,
        peripheral_target=i_ref,
        temp_range=(float(temp_range[0]), float(temp_range[1])),
        reference=float(t0),
    )


def differential_multiply(
    array: ArrayState,
    plan: DifferentialWeightPlan,
    inputs,
    temperature: float = None,
    noisy: bool = False,
    samples: int = 1,
    rng: np.random.Generator = None,
) -> np.ndarray:
    """Paired-column outputs: O_logical = O_plus - O_minus [A]."""
    rows, logical = plan.weights.shape
    if rows != array.rows:
        raise ValueError("plan rows do not match the array")
    cols = array.array_cols
    col_index = {c: k for k, c in enumerate(cols)}
    for cp, cm in plan.column_pairs:
        if cp not in col_index or cm not in col_index:
            raise ValueError(f"plan pair ({cp}, {cm}) not among array columns")
    outputs = multiply(
        array, inputs, temperature=temperature, noisy=noisy, samples=samples, rng=rng
    )
    return np.array(
        [outputs[col_index[cp]] - outputs[col_index[cm]] for cp, cm in plan.column_pairs]
    )
