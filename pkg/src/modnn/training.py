"""MSE training for both model variants, with a per-epoch consistency
monitor.

The decoder always rolls its own predictions (no teacher forcing), matching
how the model is used at control time. Validation losses are reported in
C^2; the response-violation monitor runs on a fixed validation subsample and
is never back-propagated, so it observes rather than shapes the model.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .consistency import mae_mape, trv
from .errors import DatasetError, TrainingError
from .models import (
    DynamicsModel,
    ModelConfig,
    StagedBatch,
    lstm_decode,
    lstm_encode,
    modnn_decode,
    modnn_encode,
    stage_windows,
)
from .optim import AdamState, adam_update
from .windows import WindowDataset


@dataclass
class TrainHyper:
    epochs: int = 50
    lr: float = 1e-3
    batch: int = 32
    seed: int = 0
    trv_monitor_windows: int = 8
    trv_u_floor: float = -4000.0
    trv_u_ceiling: float = 0.0


@dataclass
class TrainReport:
    variant: str
    train_mse: list[float] = field(default_factory=list)  # C^2 per epoch
    val_mse: list[float] = field(default_factory=list)
    val_trv: list[float] = field(default_factory=list)  # C h per epoch
    wall_time_s: float = 0.0
    final_mae: float = float("nan")
    final_mape: float = float("nan")

    def to_json(self, zero_wall_time: bool = False) -> str:
        d = asdict(self)
        if zero_wall_time:
            d["wall_time_s"] = 0.0
        return json.dumps(d, sort_keys=True, indent=1)

    def to_curve_csv(self) -> str:
        lines = ["epoch,train_mse,val_mse,val_trv"]
        for e, (a, b, c) in enumerate(zip(self.train_mse, self.val_mse, self.val_trv)):
            lines.append(f"{e},{a!r},{b!r},{c!r}")
        return "\n".join(lines) + "\n"


def _select(s: StagedBatch, idx: np.ndarray) -> StagedBatch:
    return StagedBatch(
        B=len(idx),
        hist_ext=s.hist_ext[:, idx, :],
        hist_int=s.hist_int[:, idx, :],
        hist_all=s.hist_all[:, idx, :],
        cur_ext=s.cur_ext[idx],
        cur_int=s.cur_int[idx],
        cur_all=s.cur_all[idx],
        fut_ext=s.fut_ext[:, idx, :],
        fut_int=s.fut_int[:, idx, :],
        fut_dist5=s.fut_dist5[:, idx, :],
        u_watts=s.u_watts[idx],
        y0_n=s.y0_n[idx],
        truth=None if s.truth is None else s.truth[idx],
    )


def taped_mse(
    params: dict[str, np.ndarray], cfg: ModelConfig, norm, batch: StagedBatch
) -> tuple[ad.Tape, ad.Var]:
    """Full training tape: parameters in, normalized-space MSE out."""
    if batch.truth is None:
        raise DatasetError("training batch has no ground-truth temperatures")
    tape = ad.Tape()
    pv = tape.leaves(params)
    u_n = norm.normalize("u_hvac", batch.u_watts)
    if cfg.variant == "modnn":
        h_ext, h_int = modnn_encode(pv, cfg, batch)
        ys = modnn_decode(pv, cfg, batch, u_n, h_ext, h_int, batch.y0_n)
    else:
        h, c = lstm_encode(pv, cfg, batch)
        ys = lstm_decode(pv, cfg, batch, u_n, h, c, batch.y0_n)
    pred = ad.hstack(ys)
    truth_n = norm.normalize("t_zone", batch.truth)
    diff = ad.sub(pred, truth_n)
    return tape, ad.mean_all(ad.mul(diff, diff))


def train(
    variant: str,
    train_set: WindowDataset,
    val_set: WindowDataset,
    hyper: TrainHyper | None = None,
    model_cfg: ModelConfig | None = None,
) -> tuple[DynamicsModel, TrainReport]:
    """Minimize decoder MSE with Adam; deterministic per seed.

    Returns the trained model and a report with per-epoch train/val MSE and
    the validation response-violation monitor. Zero epochs returns the
    freshly initialized model untouched.
    """
    hyper = hyper or TrainHyper()
    if len(train_set) == 0:
        raise DatasetError("empty training dataset")
    if train_set.norm is None:
        raise DatasetError("training dataset carries no normalization stats")
    cfg = model_cfg or ModelConfig(variant=variant, L=train_set.L, M=train_set.M)
    if (cfg.variant, cfg.L, cfg.M) != (variant, train_set.L, train_set.M):
        raise DatasetError("model config does not match dataset windows")
    norm = train_set.norm
    model = DynamicsModel.initialize(cfg, norm, seed=hyper.seed)
    report = TrainReport(variant=variant)
    t0 = time.perf_counter()

    staged_train = stage_windows(train_set.windows(), cfg, norm)
    val_windows = val_set.windows()
    staged_val = stage_windows(val_windows, cfg, norm) if val_windows else None
    monitor = val_windows[: hyper.trv_monitor_windows]
    sz2 = norm.std["t_zone"] ** 2

    rng = np.random.default_rng(hyper.seed)
    opt = AdamState(lr=hyper.lr)
    params = model.params
    n = len(train_set)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        losses = []
        for k in range(0, n, hyper.batch):
            batch = _select(staged_train, order[k : k + hyper.batch])
            tape, loss = taped_mse(params, cfg, norm, batch)
            value = float(loss.value[0, 0])
            if not np.isfinite(value):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            grads = ad.forward_backward(tape, loss)
            params = adam_update(opt, params, grads)
            losses.append(value)
        model.params = params
        report.train_mse.append(float(np.mean(losses)) * sz2)
        if staged_val is not None:
            pred = model.predict_staged(staged_val)
            val_mse = float(np.mean((pred - staged_val.truth) ** 2))
            if not np.isfinite(val_mse):
                raise TrainingError(f"non-finite validation loss at epoch {epoch}")
            report.val_mse.append(val_mse)
            plus, minus = trv(model, monitor, hyper.trv_u_floor, hyper.trv_u_ceiling)
            report.val_trv.append(plus + minus)

    model.params = params
    report.wall_time_s = time.perf_counter() - t0
    if staged_val is not None:
        pred = model.predict_staged(staged_val)
        report.final_mae, report.final_mape = mae_mape(pred, staged_val.truth)
    return model, report
