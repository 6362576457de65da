"""Single-cell readout: exponential gate control and temperature scaling.

Run: python3 demos/01_subthreshold_readout.py
"""

import numpy as np

from flashvmm import DEFAULT_CONFIG, READOUT_BIAS, drain_current, fresh_cell
from flashvmm.cell import BiasCondition, vth_for_standard_current
from flashvmm.constants import T_25C, T_85C, thermal_voltage

cfg = DEFAULT_CONFIG
cal = cfg.calibration

print("=" * 64)
print("Subthreshold readout of one floating-gate cell")
print("=" * 64)
print(f"slope factor n = {cfg.n:.4f}, prefactor i0 = {cfg.i0:.0e} A")
print(f"tunable window: v_th in [{cal.v_th_min:.3f}, {cal.v_th_max:.3f}] V")
print(f"  -> standard-bias currents {cfg.current_window[0]:.0e}..{cfg.current_window[1]:.0e} A")

# one decade of current per n*kT/q*ln(10) of gate voltage
dv_decade = cfg.n * thermal_voltage(T_25C) * np.log(10.0)
print(f"\ngate voltage per current decade at 25 C: {dv_decade*1e3:.1f} mV")

cell = fresh_cell(cfg, seed=1, v_th=cal.v_th_center)
print("\n  v_cg [V]    I [A]")
for v_cg in np.arange(1.6, 3.01, 0.2):
    i = drain_current(cell, BiasCondition(2.5, float(v_cg), 1.0, 0.0, 0.0), T_25C, cfg)
    print(f"  {v_cg:7.2f}    {i:.3e}")

# warming a low-current state raises its readout current dramatically
print("\nTemperature dependence (fixed standard bias):")
print("  state @25C     I(25C)       I(85C)       ratio")
for level in (1e-9, 1e-8, 1e-7):
    c = fresh_cell(cfg, seed=2, v_th=vth_for_standard_current(level, cfg))
    i25 = drain_current(c, READOUT_BIAS, T_25C, cfg)
    i85 = drain_current(c, READOUT_BIAS, T_85C, cfg)
    print(f"  {level:9.0e}    {i25:.3e}    {i85:.3e}    {i85/i25:5.2f}x")

print("\nThe 1 nA state warms past one order of magnitude, which is why the")
print("multiplier needs the gate-coupled (and differential) compensation.")
