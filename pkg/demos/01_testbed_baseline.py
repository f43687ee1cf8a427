#!/usr/bin/env python3
"""Tour of the RC testbed: weather, occupancy, thermostat cycling.

Runs ten summer days of the on-off baseline, prints what the zone does
around an afternoon arrival, checks the energy balance of the log, and
writes the frame CSV. With matplotlib installed it also saves a day plot.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from modnn import RCParams, run_baseline, save_frame
from modnn.testbed import flux_balance

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

frame = run_baseline(days=10, seed=4)
print(f"simulated {len(frame)} steps ({len(frame) // 96} days) starting {frame.start}")
print(f"zone temperature range: {frame.t_zone.min():.1f} .. {frame.t_zone.max():.1f} C")
print(f"HVAC thermal power range: {frame.u_hvac.min():.0f} .. {frame.u_hvac.max():.0f} W")
print(f"cooling duty cycle: {(frame.u_hvac < 0).mean():.0%}")

# the afternoon story: away at 32 C setpoint, then a hot arrival
occupied = frame.occ > 0
arrivals = np.where(occupied[1:] & ~occupied[:-1])[0] + 1
a = arrivals[2]
hour = (a % 96) * 0.25
print(f"\narrival on day {a // 96} at {int(hour):02d}:{int(hour % 1 * 60):02d}, zone at {frame.t_zone[a]:.1f} C")
rec = np.argmax(frame.t_zone[a:] <= 24.25)
print(f"the thermostat needs {rec} steps ({rec * 0.25:.1f} h) to pull it back to 24.25 C")

observed, expected = flux_balance(frame, RCParams())
err = np.abs(observed - expected) / np.maximum(np.abs(expected), 1.0)
print(f"\nenergy balance of the log: max relative error {err.max():.2e}")

path = OUT / "baseline_frame.csv"
save_frame(frame, path)
print(f"wrote {path}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    day = slice(2 * 96, 4 * 96)
    t = np.arange(day.start, day.stop) * 0.25
    fig, axes = plt.subplots(3, 1, figsize=(9, 7), sharex=True)
    axes[0].plot(t, frame.t_out[day], label="outdoor")
    axes[0].plot(t, frame.t_zone[day], label="zone")
    axes[0].set_ylabel("C")
    axes[0].legend()
    axes[1].plot(t, frame.u_hvac[day])
    axes[1].set_ylabel("HVAC W")
    axes[2].step(t, frame.occ[day])
    axes[2].set_ylabel("occupants")
    axes[2].set_xlabel("hour")
    fig.tight_layout()
    fig.savefig(OUT / "baseline_days.png", dpi=120)
    print(f"wrote {OUT / 'baseline_days.png'}")
except ImportError:
    print("matplotlib not installed; skipping the plot")
