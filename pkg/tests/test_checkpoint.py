"""Checkpoint round trips and corruption detection."""

import numpy as np
import pytest

from modnn import checkpoint
from modnn.errors import IntegrityError


def _params():
    rng = np.random.default_rng(9)
    return {
        "enc.w": rng.normal(size=(4, 8)),
        "enc.b": rng.normal(size=(1, 8)),
        "ro.w": rng.normal(size=(8, 1)) * 1e-7,
    }


def test_value_exact_round_trip(tmp_path):
    p = _params()
    path = tmp_path / "m.json"
    checkpoint.save(path, p, meta={"variant": "test", "hidden": 8})
    loaded, meta = checkpoint.load(path)
    assert meta["variant"] == "test"
    for k in p:
        np.testing.assert_array_equal(loaded[k], p[k])


def test_byte_identical_resave(tmp_path):
    p = _params()
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    checkpoint.save(a, p, meta={"x": 1})
    loaded, meta = checkpoint.load(a)
    checkpoint.save(b, loaded, meta=meta)
    assert a.read_bytes() == b.read_bytes()


def test_corrupted_payload_raises_integrity_error(tmp_path):
    path = tmp_path / "m.json"
    checkpoint.save(path, _params())
    text = path.read_text()
    path.write_text(text.replace('"data": [', '"data": [9999.0, ', 1))
    with pytest.raises(IntegrityError):
        checkpoint.load(path)


def test_truncated_file_raises_integrity_error(tmp_path):
    path = tmp_path / "m.json"
    checkpoint.save(path, _params())
    path.write_text(path.read_text()[: len(path.read_text()) // 2])
    with pytest.raises(IntegrityError):
        checkpoint.load(path)


def test_wrong_format_rejected(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"format": "other", "version": 1}')
    with pytest.raises(IntegrityError):
        checkpoint.load(path)
