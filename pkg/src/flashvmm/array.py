"""Cell array with the modified column-erase routing.

Rows carry source, coupling-gate and word lines; columns carry bit and
erase-gate lines. The two outer columns are peripheral (input) cells,
one half of each supercell row pair. Bias-scheme builders return the
full per-cell bias map for a selective program or erase pulse; pulse
application updates every cell under its own bias so half-select residue
accumulates and is tracked in a disturb log.
"""

from dataclasses import dataclass

import numpy as np

from .cell import (
    READOUT_BIAS,
    BiasCondition,
    CellState,
    PulseKind,
    PulseSpec,
    drain_current,
    pulse_shift,
    readout_noisy,
    vth_for_standard_current,
)
from .config import DEFAULT_CONFIG, ModelConfig, config_hash

ROLES = ("selected", "row_half", "col_half", "unselected")

_MEASURE_STREAM_TAG = 0xA77A

STATE_FORMAT_VERSION = 1


@dataclass
class DisturbLog:
    """Cumulative half-select exposure: |dv_th| per cell plus pulse counts."""

    cumulative_dvth: np.ndarray
    counts: dict

    @classmethod
    def empty(cls, rows: int, cols: int) -> "DisturbLog":
        return cls(
            cumulative_dvth=np.zeros((rows, cols)),
            counts={role: np.zeros((rows, cols), dtype=np.int64) for role in ROLES},
        )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,col,cumulative_dvth," + ",".join(ROLES) + "\n")
            rows, cols = self.cumulative_dvth.shape
            for r in range(rows):
                for c in range(cols):
                    counts = ",".join(str(int(self.counts[k][r, c])) for k in ROLES)
                    fh.write(f"{r},{c},{float(self.cumulative_dvth[r, c])!r},{counts}\n")


@dataclass
class DisturbDelta:
    """Per-pulse disturb record returned by ``pulse_cell``."""

    target: tuple
    kind: PulseKind
    dvth: np.ndarray  # signed v_th change of every cell
    roles: np.ndarray  # role index into ROLES per cell


class ArrayState:
    """Grid of cell states plus line topology and measurement stream."""

    def __init__(self, cfg, rows, cols, topology, v_th, n_slope, i0, seeds, counts):
        if topology not in ("modified", "original"):
            raise ValueError("topology must be 'modified' or 'original'")
        cfg.require_calibration()
        self.cfg = cfg
        self.rows = int(rows)
        self.cols = int(cols)
        self.topology = topology
        self.v_th = v_th
        self.n_slope = n_slope
        self.i0 = i0
        self.rng_seeds = seeds
        self.rng_counts = counts
        self.disturb = DisturbLog.empty(self.rows, self.cols)
        self.measure_rng = np.random.default_rng((int(cfg.seed), _MEASURE_STREAM_TAG))

    @classmethod
    def fresh(
        cls,
        cfg: ModelConfig = DEFAULT_CONFIG,
        rows: int = 10,
        cols: int = 12,
        topology: str = "modified",
        initial: str = "programmed",
    ) -> "ArrayState":
        """New array with all cells at a window boundary.

        ``initial`` is 'programmed' (lowest current), 'erased' (highest)
        or 'center'.
        """
        if rows < 1 or cols < 1:
            raise ValueError("array must have at least one row and column")
        cal = cfg.require_calibration()
        start = {
            "programmed": cal.v_th_max,
            "erased": cal.v_th_min,
            "center": cal.v_th_center,
        }[initial]
        seed_gen = np.random.default_rng(int(cfg.seed))
        seeds = seed_gen.integers(0, 2**63 - 1, size=(rows, cols), dtype=np.int64)
        return cls(
            cfg=cfg,
            rows=rows,
            cols=cols,
            topology=topology,
            v_th=np.full((rows, cols), start, dtype=float),
            n_slope=np.full((rows, cols), cfg.n, dtype=float),
            i0=np.full((rows, cols), cfg.i0, dtype=float),
            seeds=seeds,
            counts=np.zeros((rows, cols), dtype=np.int64),
        )

    # ------------------------------------------------------------ layout

    @property
    def peripheral_cols(self) -> tuple:
        """Outer column pair reserved for input cells (empty if too narrow)."""
        return (0, self.cols - 1) if self.cols >= 3 else ()

    @property
    def array_cols(self) -> list:
        per = set(self.peripheral_cols)
        return [c for c in range(self.cols) if c not in per]

    @property
    def supercell_row_pairs(self) -> list:
        """Metadata only: row pairs sharing source and erase gate."""
        return [(r, r + 1) for r in range(0, self.rows - 1, 2)]

    def peripheral_col_for_row(self, row: int) -> int:
        """Which outer column holds the usable peripheral half for a row."""
        if not self.peripheral_cols:
            raise ValueError("array has no peripheral columns")
        return self.peripheral_cols[0] if row % 2 == 0 else self.peripheral_cols[1]

    def _check_target(self, row: int, col: int) -> None:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"cell ({row}, {col}) outside {self.rows}x{self.cols}")

    # ------------------------------------------------------- cell access

    def cell_at(self, row: int, col: int) -> CellState:
        self._check_target(row, col)
        return CellState(
            v_th=float(self.v_th[row, col]),
            n_slope=float(self.n_slope[row, col]),
            i0=float(self.i0[row, col]),
            noise=self.cfg.noise,
            rng_seed=int(self.rng_seeds[row, col]),
            rng_count=int(self.rng_counts[row, col]),
        )

    def set_cell(self, row: int, col: int, cell: CellState) -> None:
        self._check_target(row, col)
        self.v_th[row, col] = cell.v_th
        self.n_slope[row, col] = cell.n_slope
        self.i0[row, col] = cell.i0
        self.rng_seeds[row, col] = cell.rng_seed
        self.rng_counts[row, col] = cell.rng_count

    def set_cell_current(self, row: int, col: int, current: float) -> None:
        """Place a cell's v_th to read ``current`` at standard bias (clamped)."""
        self._check_target(row, col)
        cal = self.cfg.require_calibration()
        v = vth_for_standard_current(current, self.cfg)
        self.v_th[row, col] = min(max(v, cal.v_th_min), cal.v_th_max)

    # ------------------------------------------------------ bias schemes

    def role_of(self, row: int, col: int, target_row: int, target_col: int) -> str:
        if row == target_row and col == target_col:
            return "selected"
        if row == target_row:
            return "row_half"
        if col == target_col:
            return "col_half"
        return "unselected"

    def build_program_scheme(self, row: int, col: int) -> dict:
        """Per-cell bias map for a selective hot-electron program pulse.

        Selected row's source line is raised to 4.5 V (others 0.5 V); the
        selected column is picked by a +4 V erase-gate-to-bit-line
        voltage (bit line 0.5 V, erase gate 4.5 V) while unselected
        columns keep that voltage negative with bit lines at 2.5 V.
        """
        self._check_target(row, col)
        inh = self.cfg.inhibition
        scheme = {}
        for r in range(self.rows):
            v_s = inh.program_sl_full if r == row else inh.program_sl_off
            v_wl = 1.0 if r == row else 0.0
            for c in range(self.cols):
                if c == col:
                    v_d = inh.program_bl_full
                    v_eg = 4.5 if self.topology == "modified" else 0.0
                else:
                    v_d = 2.5
                    v_eg = 0.0
                scheme[(r, c)] = BiasCondition(
                    v_wl=v_wl, v_cg=0.0, v_d=v_d, v_s=v_s, v_eg=v_eg
                )
        return scheme

    def build_erase_scheme(self, row: int, col: int) -> dict:
        """Per-cell bias map for a selective tunneling-erase pulse.

        Modified routing: the selected column's erase-gate line gets the
        11.5 V pulse, the selected row's coupling-gate line is grounded
        and unselected rows are held at +8 V to inhibit tunneling. With
        the original row-routed erase gates the pulse necessarily hits
        the whole target row and no coupling-gate gating exists.
        """
        self._check_target(row, col)
        inh = self.cfg.inhibition
        scheme = {}
        for r in range(self.rows):
            if self.topology == "modified":
                v_cg = inh.erase_cg_full if r == row else inh.erase_cg_inhibit
            else:
                v_cg = 0.0
            for c in range(self.cols):
                if self.topology == "modified":
                    v_eg = inh.erase_eg_full if c == col else inh.erase_eg_off
                else:
                    v_eg = inh.erase_eg_full if r == row else inh.erase_eg_off
                scheme[(r, c)] = BiasCondition(
                    v_wl=0.0, v_cg=v_cg, v_d=0.0, v_s=0.0, v_eg=v_eg
                )
        return scheme

    # ------------------------------------------------------------ pulses

    def pulse_cell(self, row: int, col: int, pulse: PulseSpec) -> DisturbDelta:
        """Apply one pulse to the target; every cell sees its own bias."""
        if pulse.kind is PulseKind.PROGRAM:
            scheme = self.build_program_scheme(row, col)
        else:
            scheme = self.build_erase_scheme(row, col)

        dvth = np.zeros((self.rows, self.cols))
        roles = np.array(
            [
                [ROLES.index(self.role_of(r, c, row, col)) for c in range(self.cols)]
                for r in range(self.rows)
            ],
            dtype=np.int64,
        )
        if pulse.duration == 0.0:
            # no-op pulse: neither state nor disturb accounting moves
            return DisturbDelta(
                target=(row, col), kind=pulse.kind, dvth=dvth, roles=roles
            )

        for (r, c), bias in scheme.items():
            new_vth, new_count, delta = pulse_shift(
                pulse.kind,
                float(self.v_th[r, c]),
                int(self.rng_seeds[r, c]),
                int(self.rng_counts[r, c]),
                pulse,
                bias,
                self.cfg,
            )
            self.v_th[r, c] = new_vth
            self.rng_counts[r, c] = new_count
            dvth[r, c] = delta
            role = ROLES[roles[r, c]]
            self.disturb.counts[role][r, c] += 1
            if role != "selected":
                self.disturb.cumulative_dvth[r, c] += abs(delta)

        return DisturbDelta(target=(row, col), kind=pulse.kind, dvth=dvth, roles=roles)

    # ----------------------------------------------------------- readout

    def read_cell(
        self,
        row: int,
        col: int,
        temperature: float = None,
        noisy: bool = False,
        samples: int = 1,
    ) -> float:
        """Standard-bias readout [A]; never mutates any cell state."""
        self._check_target(row, col)
        t = self.cfg.temperature_ref if temperature is None else temperature
        cell = self.cell_at(row, col)
        if noisy:
            return readout_noisy(
                cell, READOUT_BIAS, t, samples, rng=self.measure_rng, cfg=self.cfg
            )
        return drain_current(cell, READOUT_BIAS, t, self.cfg)

    # ------------------------------------------------------- persistence

    def save(self, path) -> None:
        """Plain-text state dump, one record per cell, versioned header."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# flashvmm-array v{STATE_FORMAT_VERSION}\n")
            fh.write(
                f"# rows={self.rows} cols={self.cols} topology={self.topology}\n"
            )
            fh.write(f"# config_hash={config_hash(self.cfg)}\n")
            fh.write("row,col,v_th,n_slope,i0,seed,draws\n")
            for r in range(self.rows):
                for c in range(self.cols):
                    fh.write(
                        f"{r},{c},{float(self.v_th[r, c])!r},"
                        f"{float(self.n_slope[r, c])!r},"
                        f"{float(self.i0[r, c])!r},{int(self.rng_seeds[r, c])},"
                        f"{int(self.rng_counts[r, c])}\n"
                    )

    @classmethod
    def load(cls, path, cfg: ModelConfig = DEFAULT_CONFIG) -> "ArrayState":
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or not lines[0].startswith("# flashvmm-array v"):
            raise ValueError(f"{path}: not a flashvmm array state file")
        version = int(lines[0].rsplit("v", 1)[1])
        if version != STATE_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported state version {version}")
        meta = dict(
            item.split("=", 1) for item in lines[1].lstrip("# ").split()
        )
        saved_hash = lines[2].split("=", 1)[1].strip()
        if saved_hash != config_hash(cfg):
            raise ValueError(
                f"{path}: state was written under config {saved_hash}, "
                f"current config is {config_hash(cfg)}"
            )
        rows, cols = int(meta["rows"]), int(meta["cols"])
        arr = cls.fresh(cfg, rows=rows, cols=cols, topology=meta["topology"])
        for line in lines[4:]:
            if not line.strip():
                continue
            r, c, v_th, n, i0, seed, draws = line.split(",")
            r, c = int(r), int(c)
            arr.v_th[r, c] = float(v_th)
            arr.n_slope[r, c] = float(n)
            arr.i0[r, c] = float(i0)
            arr.rng_seeds[r, c] = int(seed)
            arr.rng_counts[r, c] = int(draws)
        return arr
