"""Window extraction counts, alignment, and split hygiene."""

import numpy as np
import pytest

from modnn import testbed as tb
from modnn.errors import DatasetError
from modnn.frames import TimeSeriesFrame
from modnn.windows import build_windows, train_val_split


def _frame(n):
    base = tb.run_baseline(max(1, (n + 95) // 96), seed=1)
    return base.slice(0, n)


def test_exact_span_gives_one_window():
    L, M = 8, 6
    frame = _frame(L + 1 + M)
    ds = build_windows(frame, L, M, stride=1)
    assert len(ds) == 1


def test_count_formula():
    L, M = 8, 6
    frame = _frame(L + 1 + M + 9)
    ds = build_windows(frame, L, M, stride=1)
    assert len(ds) == 10


def test_stride_m_gives_disjoint_decoder_segments():
    L, M = 8, 6
    frame = _frame(96)
    ds = build_windows(frame, L, M, stride=M)
    futures = [(w.cur, w.cur + M) for w in ds.windows()]
    for (a0, a1), (b0, b1) in zip(futures, futures[1:]):
        assert a1 <= b0


def test_too_short_frame_raises():
    frame = _frame(10)
    with pytest.raises(DatasetError):
        build_windows(frame, 8, 6, stride=1)


def test_window_alignment_first_truth_is_next_row():
    frame = _frame(40)
    ds = build_windows(frame, 8, 6, stride=1)
    w = ds[3]
    assert w.cur == 3 + 8
    assert w.truth[0] == frame.t_zone[w.cur + 1]
    np.testing.assert_array_equal(w.future_u, frame.u_hvac[w.cur : w.cur + 6])
    np.testing.assert_array_equal(w.hist("t_zone"), frame.t_zone[3 : 3 + 8])


def test_override_u_is_the_only_overwritable_channel():
    frame = _frame(40)
    w = build_windows(frame, 8, 6)[0]
    u2 = np.full(6, -123.0)
    w2 = w.with_u(u2)
    np.testing.assert_array_equal(w2.future_u, u2)
    np.testing.assert_array_equal(w2.future("t_out"), w.future("t_out"))
    np.testing.assert_array_equal(w.future_u, frame.u_hvac[w.cur : w.cur + 6])


def test_split_has_no_temporal_leakage():
    frame = tb.run_baseline(12, seed=6)
    train, val = train_val_split(frame, train_days=7, val_days=3, L=8, M=6)
    last_train_ts = max(w.cur + w.M for w in train.windows())
    # validation rows live in a frame that starts after every training row
    train_end = train.frame.timestamp(last_train_ts)
    val_start_ts = val.frame.timestamp(int(val.starts[0]))
    assert val_start_ts > train_end
    assert train.norm is val.norm


def test_split_normalization_uses_training_rows_only():
    frame = tb.run_baseline(12, seed=6)
    train, _ = train_val_split(frame, train_days=7, val_days=3, L=8, M=6)
    manual = frame.slice(0, 7 * 96)
    assert train.norm.mean["t_zone"] == pytest.approx(manual.t_zone.mean(), abs=1e-12)


def test_split_requires_enough_days():
    frame = tb.run_baseline(5, seed=6)
    with pytest.raises(DatasetError):
        train_val_split(frame, train_days=4, val_days=2, L=8, M=6)
