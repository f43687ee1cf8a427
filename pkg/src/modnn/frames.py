"""Uniformly sampled multichannel records and their CSV round trip.

A TimeSeriesFrame is the universal data currency: outdoor temperature, solar
irradiance, occupant count, HVAC thermal power (signed, cooling negative),
HVAC electrical power, and zone temperature at a fixed step (900 s).

CSV schema (header required, exact names, ISO-8601 timestamps):

    timestamp,t_out_c,solar_wm2,occ,u_hvac_w,p_elec_w,t_zone_c

Floats are written with repr (shortest exact decimal), so save -> load is
lossless and load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import IngestionError, ShapeError

STEP_SECONDS = 900.0
CSV_COLUMNS = ("timestamp", "t_out_c", "solar_wm2", "occ", "u_hvac_w", "p_elec_w", "t_zone_c")
CHANNELS = ("t_out", "solar", "occ", "u_hvac", "p_elec", "t_zone")


@dataclass
class TimeSeriesFrame:
    start: datetime
    step_s: float
    t_out: np.ndarray
    solar: np.ndarray
    occ: np.ndarray
    u_hvac: np.ndarray
    p_elec: np.ndarray
    t_zone: np.ndarray

    def __post_init__(self):
        n = len(self.t_out)
        for name in CHANNELS:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or len(arr) != n:
                raise ShapeError(f"channel {name!r} length {len(arr)} != {n}")
            setattr(self, name, arr)
        if self.step_s <= 0:
            raise ShapeError("step must be positive")
        self._hours_cache: np.ndarray | None = None

    def __len__(self):
        return len(self.t_out)

    @property
    def steps_per_day(self) -> int:
        return int(round(86400.0 / self.step_s))

    def timestamp(self, i: int) -> datetime:
        return self.start + timedelta(seconds=i * self.step_s)

    def timestamps(self) -> list[datetime]:
        return [self.timestamp(i) for i in range(len(self))]

    def hour_of_day(self) -> np.ndarray:
        """Fractional hour of day per row, derived from start + step."""
        if self._hours_cache is None:
            h0 = self.start.hour + self.start.minute / 60.0 + self.start.second / 3600.0
            self._hours_cache = (h0 + np.arange(len(self)) * self.step_s / 3600.0) % 24.0
        return self._hours_cache

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(name)
        return getattr(self, name)

    def slice(self, lo: int, hi: int) -> "TimeSeriesFrame":
        return TimeSeriesFrame(
            start=self.timestamp(lo),
            step_s=self.step_s,
            **{name: getattr(self, name)[lo:hi].copy() for name in CHANNELS},
        )

    def copy(self) -> "TimeSeriesFrame":
        return self.slice(0, len(self))


def save_frame(frame: TimeSeriesFrame, path, comment: str | None = None) -> None:
    """Write the frame; an optional `# ...` comment line (e.g. a config hash)
    precedes the header and is ignored on load."""
    lines = []
    if comment is not None:
        lines.append(f"# {comment}")
    lines.append(",".join(CSV_COLUMNS))
    stamps = frame.timestamps()
    chans = [getattr(frame, c) for c in CHANNELS]
    for i, ts in enumerate(stamps):
        vals = ",".join(repr(float(ch[i])) for ch in chans)
        lines.append(f"{ts.isoformat()},{vals}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_frame(path) -> TimeSeriesFrame:
    """Parse and validate a frame CSV; errors carry the offending line number.

    Line numbers are 1-based file lines; `#` comment lines are skipped but
    still counted.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [
        (no, ln)
        for no, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise IngestionError(f"{path}: empty file")
    header = lines[0][1].split(",")
    unknown = [c for c in header if c not in CSV_COLUMNS]
    if unknown:
        raise IngestionError(f"{path}: unknown column(s) {', '.join(unknown)}")
    if tuple(header) != CSV_COLUMNS:
        raise IngestionError(
            f"{path}: header must be exactly {','.join(CSV_COLUMNS)}"
        )
    stamps: list[datetime] = []
    linenos: list[int] = []
    data: list[list[float]] = [[] for _ in CHANNELS]
    for lineno, line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise IngestionError(f"{path}: line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(parts)}")
        try:
            stamps.append(datetime.fromisoformat(parts[0]))
        except ValueError as e:
            raise IngestionError(f"{path}: line {lineno}: bad timestamp {parts[0]!r}") from e
        linenos.append(lineno)
        try:
            for k, raw in enumerate(parts[1:]):
                data[k].append(float(raw))
        except ValueError as e:
            raise IngestionError(f"{path}: line {lineno}: non-numeric value") from e
    if not stamps:
        raise IngestionError(f"{path}: no data rows")
    start = stamps[0]
    for i, ts in enumerate(stamps):
        expect = start + timedelta(seconds=i * STEP_SECONDS)
        if ts != expect:
            raise IngestionError(
                f"{path}: line {linenos[i]}: timestamp {ts.isoformat()} breaks the "
                f"{int(STEP_SECONDS)} s grid (expected {expect.isoformat()})"
            )
    arrays = {name: np.asarray(col, dtype=np.float64) for name, col in zip(CHANNELS, data)}
    return TimeSeriesFrame(start=start, step_s=STEP_SECONDS, **arrays)
