"""Reverse-mode automatic differentiation over dense 2-D float64 matrices.

A Tape records every operation as a node (values, parent indices, and one
vector-Jacobian callback per parent). Gradients come from a single reverse
sweep seeded at a scalar loss node. Only nodes actually reachable from the
loss are visited, so the adjoint of anything else is exactly zero.

Every op in this module accepts either Var handles or plain ndarrays and
returns the matching kind. Model code is therefore written once and runs in
two modes: a fast numpy-only path for frozen-model prediction, and a taped
path whenever gradients are needed. Both paths execute the identical
sequence of numpy calls, so their outputs agree bit for bit.

Shapes are restricted to 2-D (rows = batch, cols = features); a scalar is a
(1, 1) matrix.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import ContractError, ShapeError

Array = np.ndarray


def _as_matrix(x) -> Array:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    elif a.ndim != 2:
        raise ShapeError(f"tape values must be 2-D, got shape {a.shape}")
    return a


class Var:
    """Handle to one tape node."""

    __slots__ = ("tape", "i")

    def __init__(self, tape: "Tape", i: int):
        self.tape = tape
        self.i = i

    @property
    def value(self) -> Array:
        return self.tape.values[self.i]

    @property
    def shape(self):
        return self.tape.values[self.i].shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"Var(node={self.i}, shape={self.shape})"


class Tape:
    """Append-only operation record in topological order."""

    def __init__(self):
        self.values: list[Array] = []
        self.parents: list[tuple] = []
        self.vjps: list[tuple] = []
        self.leaf_ids: dict[str, int] = {}

    def __len__(self):
        return len(self.values)

    def leaf(self, value, name: str | None = None) -> Var:
        """Enter a constant or parameter. Named leaves get gradients reported."""
        idx = len(self.values)
        self.values.append(_as_matrix(value))
        self.parents.append(())
        self.vjps.append(())
        if name is not None:
            if name in self.leaf_ids:
                raise ContractError(f"duplicate leaf name {name!r}")
            self.leaf_ids[name] = idx
        return Var(self, idx)

    def leaves(self, arrays: dict[str, Array]) -> dict[str, Var]:
        return {k: self.leaf(v, name=k) for k, v in arrays.items()}

    def _record(self, value: Array, parents: tuple, vjps: tuple) -> Var:
        idx = len(self.values)
        self.values.append(value)
        self.parents.append(parents)
        self.vjps.append(vjps)
        return Var(self, idx)

    def backward(self, out: Var | int) -> list:
        """Reverse sweep from node `out`; returns the full adjoint list.

        Entries are None for nodes the loss does not reach (their adjoint is
        exactly zero). Accumulation never mutates arrays in place, so vjp
        callbacks may alias their inputs.
        """
        out_idx = out.i if isinstance(out, Var) else out
        adjoints: list = [None] * len(self.values)
        adjoints[out_idx] = np.ones_like(self.values[out_idx])
        for i in range(out_idx, -1, -1):
            a = adjoints[i]
            if a is None:
                continue
            for p, vjp in zip(self.parents[i], self.vjps[i]):
                g = vjp(a)
                adjoints[p] = g if adjoints[p] is None else adjoints[p] + g
        return adjoints

    def adjoint(self, adjoints: list, var: Var | int) -> Array:
        idx = var.i if isinstance(var, Var) else var
        a = adjoints[idx]
        return np.zeros_like(self.values[idx]) if a is None else a


def forward_backward(tape: Tape, loss: Var) -> dict[str, Array]:
    """Gradients of a scalar loss with respect to every named leaf."""
    if loss.value.size != 1:
        raise ContractError(
            f"loss node must be scalar, got shape {loss.value.shape}"
        )
    adjoints = tape.backward(loss)
    return {name: tape.adjoint(adjoints, idx) for name, idx in tape.leaf_ids.items()}


# ---------------------------------------------------------------------------
# op plumbing


def _tape_of(*xs) -> Tape | None:
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _lift(tape: Tape, x) -> Var:
    return x if isinstance(x, Var) else tape.leaf(x)


def _unbroadcast(g: Array, shape: tuple) -> Array:
    # reverse numpy broadcasting of a 2-D operand
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitive ops (Var or ndarray in, same kind out)


def add(a, b):
    t = _tape_of(a, b)
    if t is None:
        return a + b
    a, b = _lift(t, a), _lift(t, b)
    va, vb = a.value, b.value
    return t._record(
        va + vb,
        (a.i, b.i),
        (lambda g: _unbroadcast(g, va.shape), lambda g: _unbroadcast(g, vb.shape)),
    )


def sub(a, b):
    t = _tape_of(a, b)
    if t is None:
        return a - b
    a, b = _lift(t, a), _lift(t, b)
    va, vb = a.value, b.value
    return t._record(
        va - vb,
        (a.i, b.i),
        (lambda g: _unbroadcast(g, va.shape), lambda g: _unbroadcast(-g, vb.shape)),
    )


def mul(a, b):
    t = _tape_of(a, b)
    if t is None:
        return a * b
    a, b = _lift(t, a), _lift(t, b)
    va, vb = a.value, b.value
    return t._record(
        va * vb,
        (a.i, b.i),
        (lambda g: _unbroadcast(g * vb, va.shape), lambda g: _unbroadcast(g * va, vb.shape)),
    )


def matmul(a, b):
    t = _tape_of(a, b)
    if t is None:
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul mismatch {a.shape} @ {b.shape}")
        return a @ b
    a, b = _lift(t, a), _lift(t, b)
    va, vb = a.value, b.value
    if va.shape[1] != vb.shape[0]:
        raise ShapeError(f"matmul mismatch {va.shape} @ {vb.shape}")
    return t._record(
        va @ vb,
        (a.i, b.i),
        (lambda g: g @ vb.T, lambda g: va.T @ g),
    )


def scale(a, c: float):
    """Multiply by a python scalar (no extra leaf node)."""
    c = float(c)
    if not isinstance(a, Var):
        return a * c
    return a.tape._record(a.value * c, (a.i,), (lambda g: g * c,))


def shift(a, c: float):
    """Add a python scalar (no extra leaf node)."""
    c = float(c)
    if not isinstance(a, Var):
        return a + c
    return a.tape._record(a.value + c, (a.i,), (lambda g: g,))


def sigmoid(a):
    if not isinstance(a, Var):
        return expit(a)
    y = expit(a.value)
    return a.tape._record(y, (a.i,), (lambda g: g * (y * (1.0 - y)),))


def tanh(a):
    if not isinstance(a, Var):
        return np.tanh(a)
    y = np.tanh(a.value)
    return a.tape._record(y, (a.i,), (lambda g: g * (1.0 - y * y),))


# Smallest positive normal float; softplus output is floored here so the
# effective weight of a positivity-constrained layer can never round to zero.
_SOFTPLUS_FLOOR = np.finfo(np.float64).tiny


def softplus(a, floor: float = 0.0):
    if not isinstance(a, Var):
        return _softplus_impl(a, floor)
    x = a.value
    y = _softplus_impl(x, floor)
    s = expit(x)
    return a.tape._record(y, (a.i,), (lambda g: g * s,))


def _softplus_impl(x: Array, floor: float) -> Array:
    # log(1 + e^x) computed stably for large |x|
    y = np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)
    if floor:
        y = np.maximum(y, floor)
    return y


def relu(a):
    if not isinstance(a, Var):
        return np.maximum(a, 0.0)
    x = a.value
    mask = x > 0
    return a.tape._record(np.maximum(x, 0.0), (a.i,), (lambda g: g * mask,))


def hstack(parts: list):
    """Concatenate along columns."""
    t = _tape_of(*parts)
    if t is None:
        return np.concatenate(parts, axis=1)
    parts = [_lift(t, p) for p in parts]
    vals = [p.value for p in parts]
    widths = [v.shape[1] for v in vals]
    offsets = np.cumsum([0] + widths)

    def make_vjp(k):
        lo, hi = offsets[k], offsets[k + 1]
        return lambda g: g[:, lo:hi]

    return t._record(
        np.concatenate(vals, axis=1),
        tuple(p.i for p in parts),
        tuple(make_vjp(k) for k in range(len(parts))),
    )


def cols(a, lo: int, hi: int):
    """Column slice [lo, hi)."""
    if not isinstance(a, Var):
        return a[:, lo:hi]
    v = a.value

    def vjp(g):
        out = np.zeros_like(v)
        out[:, lo:hi] = g
        return out

    return a.tape._record(v[:, lo:hi], (a.i,), (vjp,))


def sum_all(a):
    if not isinstance(a, Var):
        return np.array([[a.sum()]])
    v = a.value
    return a.tape._record(
        np.array([[v.sum()]]), (a.i,), (lambda g: np.broadcast_to(g, v.shape) * 1.0,)
    )


def mean_all(a):
    if not isinstance(a, Var):
        return np.array([[a.mean()]])
    v = a.value
    inv = 1.0 / v.size
    return a.tape._record(
        np.array([[v.mean()]]),
        (a.i,),
        (lambda g: np.broadcast_to(g * inv, v.shape) * 1.0,),
    )


# ---------------------------------------------------------------------------
# fused ops: one node instead of several for the hot recurrent-cell patterns


def affine(x, w, b):
    """x @ w + b in a single node."""
    t = _tape_of(x, w, b)
    if t is None:
        return x @ w + b
    x, w, b = _lift(t, x), _lift(t, w), _lift(t, b)
    vx, vw, vb = x.value, w.value, b.value
    if vx.shape[1] != vw.shape[0]:
        raise ShapeError(f"affine mismatch {vx.shape} @ {vw.shape}")
    return t._record(
        vx @ vw + vb,
        (x.i, w.i, b.i),
        (
            lambda g: g @ vw.T,
            lambda g: vx.T @ g,
            lambda g: _unbroadcast(g, vb.shape),
        ),
    )


def affine2(x, w, h, u, b):
    """x @ w + h @ u + b in a single node (recurrent pre-activation)."""
    t = _tape_of(x, w, h, u, b)
    if t is None:
        return x @ w + h @ u + b
    x, w, h, u, b = (_lift(t, a) for a in (x, w, h, u, b))
    vx, vw, vh, vu, vb = x.value, w.value, h.value, u.value, b.value
    return t._record(
        vx @ vw + vh @ vu + vb,
        (x.i, w.i, h.i, u.i, b.i),
        (
            lambda g: g @ vw.T,
            lambda g: vx.T @ g,
            lambda g: g @ vu.T,
            lambda g: vh.T @ g,
            lambda g: _unbroadcast(g, vb.shape),
        ),
    )


def lerp(z, h, n):
    """z * h + (1 - z) * n in a single node (gated state update)."""
    t = _tape_of(z, h, n)
    if t is None:
        return z * h + (1.0 - z) * n
    z, h, n = _lift(t, z), _lift(t, h), _lift(t, n)
    vz, vh, vn = z.value, h.value, n.value
    return t._record(
        vz * vh + (1.0 - vz) * vn,
        (z.i, h.i, n.i),
        (
            lambda g: g * (vh - vn),
            lambda g: g * vz,
            lambda g: g * (1.0 - vz),
        ),
    )


def muladd2(a, b, c, d):
    """a * b + c * d in a single node (cell-state update)."""
    t = _tape_of(a, b, c, d)
    if t is None:
        return a * b + c * d
    a, b, c, d = (_lift(t, x) for x in (a, b, c, d))
    va, vb, vc, vd = a.value, b.value, c.value, d.value
    return t._record(
        va * vb + vc * vd,
        (a.i, b.i, c.i, d.i),
        (
            lambda g: g * vb,
            lambda g: g * va,
            lambda g: g * vd,
            lambda g: g * vc,
        ),
    )


def add3(a, b, c):
    """a + b + c in a single node."""
    t = _tape_of(a, b, c)
    if t is None:
        return a + b + c
    a, b, c = _lift(t, a), _lift(t, b), _lift(t, c)
    va, vb, vc = a.value, b.value, c.value
    return t._record(
        va + vb + vc,
        (a.i, b.i, c.i),
        (
            lambda g: _unbroadcast(g, va.shape),
            lambda g: _unbroadcast(g, vb.shape),
            lambda g: _unbroadcast(g, vc.shape),
        ),
    )
