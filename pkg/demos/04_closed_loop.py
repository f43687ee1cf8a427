#!/usr/bin/env python3
"""Closed-loop shootout: thermostat vs model-predictive control vs a model
with the wrong response sign.

Three controllers drive the same zone, weather, and occupancy. The
receding-horizon controller plans through a trained constrained model; the
wrong-sign model believes cooling raises the temperature, so its controller
shuts the HVAC off and the zone bakes, which is exactly the failure an
unconstrained model can smuggle into a control loop.

Demo scale: a short training run and 3 simulated days (~4 minutes).
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from modnn import (
    ControlSetup,
    LinearResponseModel,
    ModelConfig,
    TrainHyper,
    closed_loop,
    peak_load_reduction,
    run_baseline,
    train,
    train_val_split,
)

frame = run_baseline(days=40, seed=3)
train_set, val_set = train_val_split(frame, 30, 8, L=96, M=96, train_stride=6, val_stride=8)
model, _ = train("modnn", train_set, val_set, TrainHyper(epochs=10, seed=0), ModelConfig(variant="modnn"))
print("constrained model trained; running the three closed loops")

setup = ControlSetup(days=3, metric_start_day=2, iters_first=120, iters_recede=25)
wrong_sign = LinearResponseModel(coeff=-0.0005, M=96, u_low=-6000.0)

base_frame, base = closed_loop("onoff", setup, seed=3)
mpc_frame, mpc = closed_loop("mpc", setup, seed=3, model=model)
_, anti = closed_loop("mpc", setup, seed=3, model=wrong_sign)

spd = base_frame.steps_per_day
lo = setup.metric_start_day * spd
peak = peak_load_reduction(mpc_frame.slice(lo, len(mpc_frame)), base_frame.slice(lo, len(base_frame)))

print(f"\n{'controller':<22}{'violation C h':>14}{'energy kWh':>12}")
for name, m in (("on-off thermostat", base), ("MPC + trained model", mpc), ("MPC + wrong sign", anti)):
    print(f"{name:<22}{m['violation_ch']:>14.2f}{m['energy_kwh']:>12.2f}")
print(f"\npeak-hour load reduction of MPC vs thermostat: {peak:.0f}%")
