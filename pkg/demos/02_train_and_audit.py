#!/usr/bin/env python3
"""Train both model variants at demo scale and audit their physics.

The constrained model's HVAC pathway is positive by construction, so its
response-violation integral is exactly zero and its Jacobian floor is
non-negative, whatever the data. The unconstrained LSTM usually wins on
plain accuracy while losing the consistency audits; both facts print below.

Demo scale (short horizon, few epochs) keeps this under ~2 minutes; the
full-scale equivalent is `modnn train` / `modnn audit` with the default
config.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from modnn import (
    ConsistencySettings,
    ModelConfig,
    TrainHyper,
    full_report,
    run_baseline,
    train,
    train_val_split,
)

L, M = 24, 24
frame = run_baseline(days=30, seed=7)
train_set, val_set = train_val_split(frame, train_days=22, val_days=6, L=L, M=M, train_stride=4, val_stride=8)
print(f"{len(train_set)} training windows, {len(val_set)} validation windows (L={L}, M={M})")

settings = ConsistencySettings(n_trv_windows=48, n_jacobian_windows=32, pq_windows=32, pq_pairs=256)
for variant in ("modnn", "lstm"):
    cfg = ModelConfig(variant=variant, L=L, M=M, hidden=12, flux_width=4)
    model, report = train(variant, train_set, val_set, TrainHyper(epochs=12, seed=0), cfg)
    rep, _, _ = full_report(model, val_set.windows()[:64], frame, settings)
    print(f"\n[{variant}] trained {len(report.train_mse)} epochs in {report.wall_time_s:.0f} s")
    print(f"  accuracy:    MAE {rep.mae:.3f} C, MAPE {rep.mape:.2f}%")
    print(f"  consistency: TRV ({rep.trv_plus:.3f}, {rep.trv_minus:.3f}) C h, "
          f"Jacobian floor {rep.jacobian_min:+.2e} C/W, MMD {rep.mmd:.3f}")
    print(f"  violation monitor during training: {[round(v, 2) for v in report.val_trv]}")
