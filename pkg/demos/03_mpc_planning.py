#!/usr/bin/env python3
"""Plan one day of cooling through a frozen model and watch pre-cooling
emerge.

A trained constrained model is handed a hot afternoon with an arrival (the
comfort band tightens from 33 C to 24.5 C) and a 15:00-18:00 price peak.
Gradient descent on the 24 h power sequence through the frozen model finds a
plan that cools ahead of both: comfort is bought at off-peak prices.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from modnn import (
    ControlSetup,
    ModelConfig,
    MpcLossConfig,
    OptSettings,
    SchedulePolicy,
    TrainHyper,
    band_schedule,
    optimize_controls,
    price_schedule,
    run_baseline,
    train,
    train_val_split,
)
from modnn.windows import build_windows

L, M = 48, 96
frame = run_baseline(days=40, seed=11)
train_set, val_set = train_val_split(frame, 30, 8, L=L, M=M, train_stride=4, val_stride=8)
model, _ = train("modnn", train_set, val_set, TrainHyper(epochs=12, seed=0), ModelConfig(variant="modnn", L=L, M=M))
print("model trained; planning through it with frozen parameters")

# pick a window whose horizon starts mid-morning while the home is empty
setup = ControlSetup()
sched = SchedulePolicy()
window = None
for w in val_set.windows():
    hour = w.hours("future")[0]
    if 8.0 <= hour <= 9.0 and w.future("occ")[0] == 0 and w.future("occ").max() > 0:
        window = w
        break
assert window is not None

occ = window.future("occ")
band_low, band_high = band_schedule(occ, setup)
price = price_schedule(window.hours("future"), setup, sched)
cfg = MpcLossConfig(
    price=price, band_low=band_low, band_high=band_high,
    cop=3.0, u_low=setup.u_low, u_high=setup.u_high,
    w_obj=setup.w_obj, w_input=setup.w_input, w_comfort=setup.w_comfort,
)
plan = optimize_controls(model, window, cfg, OptSettings(iters=300))

arrive = int(np.argmax(occ > 0))
peak = (window.hours("future") >= 15.0) & (window.hours("future") < 18.0)
pre = slice(max(0, arrive - 16), arrive)
print(f"\nhorizon starts {window.hours('future')[0]:.2f} h, arrival after {arrive * 0.25:.1f} h")
print(f"plan loss {plan.loss:.4f} {plan.breakdown}")
print(f"mean cooling in the 4 h before arrival: {plan.u[pre].mean():.0f} W")
print(f"mean cooling during the price peak:     {plan.u[peak].mean():.0f} W")
print(f"predicted zone at arrival: {plan.y[arrive]:.2f} C (band top {band_high[arrive]} C)")
print(f"worst predicted band excess: {np.maximum(0, plan.y - band_high).max():.3f} C")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = np.arange(M) * 0.25 + window.hours("future")[0]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 5.5), sharex=True)
    ax1.plot(t, plan.y, label="planned zone temp")
    ax1.plot(t, band_high, "--", label="band top")
    ax1.plot(t, band_low, "--", label="band bottom")
    ax1.set_ylabel("C")
    ax1.legend()
    ax2.step(t, plan.u, label="planned HVAC W")
    ax2.step(t, -400 * price, alpha=0.4, label="price (scaled)")
    ax2.set_xlabel("hour")
    ax2.legend()
    fig.tight_layout()
    out = Path(__file__).resolve().parent / "out"
    out.mkdir(exist_ok=True)
    fig.savefig(out / "mpc_plan.png", dpi=120)
    print(f"wrote {out / 'mpc_plan.png'}")
except ImportError:
    print("matplotlib not installed; skipping the plot")
