"""Sliding prediction windows over a frame, plus train/validation splits.

A window at start index i covers L + 1 + M consecutive rows:

    history   rows [i, i+L)          all channels, including zone temperature
    current   row  i+L               the measurement anchoring the forecast
    future    rows [i+L, i+L+M)      disturbances and HVAC power driving the
                                     next M transitions
    truth     rows [i+L+1, i+L+1+M)  zone temperatures the model must predict

Row k of a frame holds the zone state at the start of interval k and the
inputs applied during it, so the first predicted temperature (row i+L+1) is
driven by the inputs of the current row. future_u is the only channel a
controller may overwrite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .frames import TimeSeriesFrame

NORM_CHANNELS = ("t_out", "solar", "occ", "u_hvac", "t_zone")


@dataclass
class NormStats:
    """Per-channel affine statistics (z-score), fitted on training data only."""

    mean: dict[str, float]
    std: dict[str, float]

    @classmethod
    def from_frame(cls, frame: TimeSeriesFrame) -> "NormStats":
        mean, std = {}, {}
        for ch in NORM_CHANNELS:
            arr = frame.channel(ch)
            mean[ch] = float(arr.mean())
            std[ch] = float(max(arr.std(), 1e-8))
        return cls(mean=mean, std=std)

    def normalize(self, ch: str, x):
        # multiply by the reciprocal so the taped and numpy paths round alike
        return (x - self.mean[ch]) * (1.0 / self.std[ch])

    def denormalize(self, ch: str, x):
        return x * self.std[ch] + self.mean[ch]

    def to_dict(self) -> dict:
        return {"mean": dict(self.mean), "std": dict(self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(mean=dict(d["mean"]), std=dict(d["std"]))


@dataclass
class PredictionWindow:
    """A view into one frame; cheap to create, arrays are shared not copied."""

    frame: TimeSeriesFrame
    start: int
    L: int
    M: int
    override_u: np.ndarray | None = None

    @property
    def cur(self) -> int:
        return self.start + self.L

    def hist(self, ch: str) -> np.ndarray:
        return self.frame.channel(ch)[self.start : self.cur]

    def current(self, ch: str) -> float:
        return float(self.frame.channel(ch)[self.cur])

    def future(self, ch: str) -> np.ndarray:
        if ch == "u_hvac" and self.override_u is not None:
            return self.override_u
        return self.frame.channel(ch)[self.cur : self.cur + self.M]

    @property
    def future_u(self) -> np.ndarray:
        return self.future("u_hvac")

    @property
    def truth(self) -> np.ndarray:
        return self.frame.t_zone[self.cur + 1 : self.cur + 1 + self.M]

    def hours(self, which: str) -> np.ndarray:
        """Fractional hour of day for 'hist' (L,), 'current' (1,) or 'future' (M,)."""
        h = self.frame.hour_of_day()
        if which == "hist":
            return h[self.start : self.cur]
        if which == "current":
            return h[self.cur : self.cur + 1]
        if which == "future":
            return h[self.cur : self.cur + self.M]
        raise KeyError(which)

    def with_u(self, u: np.ndarray) -> "PredictionWindow":
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.M,):
            raise DatasetError(f"override u must have shape ({self.M},), got {u.shape}")
        return PredictionWindow(self.frame, self.start, self.L, self.M, override_u=u)


@dataclass
class WindowDataset:
    frame: TimeSeriesFrame
    starts: np.ndarray
    L: int
    M: int
    split: str = ""
    norm: NormStats | None = None

    def __len__(self):
        return len(self.starts)

    def __getitem__(self, k: int) -> PredictionWindow:
        return PredictionWindow(self.frame, int(self.starts[k]), self.L, self.M)

    def windows(self) -> list[PredictionWindow]:
        return [self[k] for k in range(len(self))]

    def subset(self, idx) -> "WindowDataset":
        return WindowDataset(self.frame, self.starts[idx], self.L, self.M, self.split, self.norm)


def build_windows(
    frame: TimeSeriesFrame, L: int, M: int, stride: int = 1, split: str = ""
) -> WindowDataset:
    """All windows of span L+1+M that fit in the frame, at the given stride."""
    if stride < 1:
        raise DatasetError("stride must be >= 1")
    span = L + 1 + M
    n = len(frame)
    if n < span:
        raise DatasetError(f"frame length {n} shorter than window span {span}")
    count = (n - span) // stride + 1
    starts = np.arange(count) * stride
    return WindowDataset(frame, starts, L, M, split=split)


def train_val_split(
    frame: TimeSeriesFrame,
    train_days: int,
    val_days: int,
    L: int,
    M: int,
    train_stride: int = 4,
    val_stride: int = 8,
) -> tuple[WindowDataset, WindowDataset]:
    """Chronological split with a gap: training windows live entirely in the
    first `train_days`, validation windows entirely in the last `val_days`,
    so no validation timestamp ever precedes a training one."""
    spd = frame.steps_per_day
    total_days = len(frame) // spd
    if train_days + val_days > total_days:
        raise DatasetError(
            f"split needs {train_days}+{val_days} days but frame has {total_days}"
        )
    train_frame = frame.slice(0, train_days * spd)
    val_frame = frame.slice((total_days - val_days) * spd, total_days * spd)
    train = build_windows(train_frame, L, M, train_stride, split="train")
    val = build_windows(val_frame, L, M, val_stride, split="val")
    stats = NormStats.from_frame(train_frame)
    train.norm = stats
    val.norm = stats
    return train, val
