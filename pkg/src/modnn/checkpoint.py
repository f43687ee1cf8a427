"""Versioned JSON checkpoints for parameter dicts plus model metadata.

Layout (version 1):

    {
      "format": "modnn-checkpoint",
      "version": 1,
      "meta": { ... arbitrary JSON-serializable metadata ... },
      "params": {name: {"shape": [r, c], "data": [row-major floats]}},
      "checksum": "<sha256 of the canonical params block>"
    }

Floats are written with Python repr (shortest exact decimal), so values
survive a round trip bit for bit and re-saving a loaded checkpoint
reproduces the file byte for byte. The checksum guards against truncated
or hand-edited files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import IntegrityError

FORMAT = "modnn-checkpoint"
VERSION = 1


def _params_block(params: dict[str, np.ndarray]) -> dict:
    block = {}
    for name in sorted(params):
        arr = np.asarray(params[name], dtype=np.float64)
        block[name] = {"shape": list(arr.shape), "data": arr.ravel(order="C").tolist()}
    return block


def _checksum(block: dict) -> str:
    canon = json.dumps(block, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def dumps(params: dict[str, np.ndarray], meta: dict | None = None) -> str:
    block = _params_block(params)
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "meta": meta or {},
        "params": block,
        "checksum": _checksum(block),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def save(path, params: dict[str, np.ndarray], meta: dict | None = None) -> None:
    Path(path).write_text(dumps(params, meta), encoding="utf-8")


def loads(text: str) -> tuple[dict[str, np.ndarray], dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise IntegrityError(f"checkpoint is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise IntegrityError("not a modnn checkpoint")
    if doc.get("version") != VERSION:
        raise IntegrityError(f"unsupported checkpoint version {doc.get('version')!r}")
    block = doc.get("params")
    if not isinstance(block, dict):
        raise IntegrityError("checkpoint missing params block")
    if doc.get("checksum") != _checksum(block):
        raise IntegrityError("checkpoint checksum mismatch (corrupted file)")
    params = {}
    for name, entry in block.items():
        shape = tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape)):
            raise IntegrityError(f"parameter {name!r}: {data.size} values for shape {shape}")
        params[name] = data.reshape(shape)
    return params, doc.get("meta", {})


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    return loads(Path(path).read_text(encoding="utf-8"))
