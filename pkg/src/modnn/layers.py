"""Layers used by the dynamics models: plain linear, strictly-positive
linear, GRU cell, and LSTM cell.

Each layer is a pure function over a dict of parameter arrays. The functions
accept Vars (taped, differentiable) or ndarrays (fast frozen path); see
autodiff for the dispatch rules. Parameter dicts are flat name -> (rows, cols)
float64 arrays so they serialize and optimize uniformly.

The strictly-positive linear layer stores unconstrained raw weights and maps
them through softplus, so its effective weight matrix is positive at every
optimizer iterate, not just after a projection step. It applies no output
activation: a rectifier would clip negative outputs and break the sign
guarantee for cooling.
"""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .errors import ShapeError

# softplus(RAW_POSITIVE_INIT) ~ 0.1: small positive initial influence keeps
# the temperature-increment recursion from exploding over long horizons.
RAW_POSITIVE_INIT = math.log(math.expm1(0.1))


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


# ---------------------------------------------------------------------------
# linear layers


def init_linear(rng, n_in: int, n_out: int, prefix: str) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.w": glorot(rng, n_in, n_out),
        f"{prefix}.b": np.zeros((1, n_out)),
    }


def linear(p, prefix: str, x):
    return ad.affine(x, p[f"{prefix}.w"], p[f"{prefix}.b"])


def init_positive_linear(n_in: int, n_out: int, prefix: str) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.raw_w": np.full((n_in, n_out), RAW_POSITIVE_INIT),
        f"{prefix}.b": np.zeros((1, n_out)),
    }


def positive_weight(p, prefix: str):
    """Effective weight matrix, strictly positive for every finite raw value."""
    return ad.softplus(p[f"{prefix}.raw_w"], floor=ad._SOFTPLUS_FLOOR)


def positive_linear(p, prefix: str, x):
    """y = softplus(raw_w) . x + b, so every dy_i/dx_j is strictly positive."""
    w = positive_weight(p, prefix)
    xw = np.shape(x if not isinstance(x, ad.Var) else x.value)
    ww = np.shape(w if not isinstance(w, ad.Var) else w.value)
    if xw[1] != ww[0]:
        raise ShapeError(f"positive_linear: input {xw} vs weight {ww}")
    return ad.affine(x, w, p[f"{prefix}.b"])


# ---------------------------------------------------------------------------
# recurrent cells
#
# Gate weights are fused: one (in, 2H) / (H, 2H) block for the update and
# reset gates, and a separate block for the candidate. The candidate applies
# the reset gate after the hidden matmul (the common fused-kernel variant).


def init_gru(rng, n_in: int, hidden: int, prefix: str) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.w_zr": glorot(rng, n_in, 2 * hidden),
        f"{prefix}.u_zr": glorot(rng, hidden, 2 * hidden),
        f"{prefix}.b_zr": np.zeros((1, 2 * hidden)),
        f"{prefix}.w_n": glorot(rng, n_in, hidden),
        f"{prefix}.u_n": glorot(rng, hidden, hidden),
        f"{prefix}.b_n": np.zeros((1, hidden)),
    }


def gru_step(p, prefix: str, x, h, hidden: int):
    """One GRU update. Zero parameters give z = r = 0.5 and h' = 0.5 h."""
    zr = ad.sigmoid(
        ad.affine2(x, p[f"{prefix}.w_zr"], h, p[f"{prefix}.u_zr"], p[f"{prefix}.b_zr"])
    )
    z = ad.cols(zr, 0, hidden)
    r = ad.cols(zr, hidden, 2 * hidden)
    n = ad.tanh(
        ad.add3(
            ad.matmul(x, p[f"{prefix}.w_n"]),
            ad.mul(r, ad.matmul(h, p[f"{prefix}.u_n"])),
            p[f"{prefix}.b_n"],
        )
    )
    # h' = z * h + (1 - z) * n
    return ad.lerp(z, h, n)


def init_lstm(rng, n_in: int, hidden: int, prefix: str) -> dict[str, np.ndarray]:
    b = np.zeros((1, 4 * hidden))
    b[0, hidden : 2 * hidden] = 1.0  # forget-gate bias starts open
    return {
        f"{prefix}.w": glorot(rng, n_in, 4 * hidden),
        f"{prefix}.u": glorot(rng, hidden, 4 * hidden),
        f"{prefix}.b": b,
    }


def lstm_step(p, prefix: str, x, h, c, hidden: int):
    """One LSTM update; gate order (input, forget, candidate, output)."""
    pre = ad.affine2(x, p[f"{prefix}.w"], h, p[f"{prefix}.u"], p[f"{prefix}.b"])
    i = ad.sigmoid(ad.cols(pre, 0, hidden))
    f = ad.sigmoid(ad.cols(pre, hidden, 2 * hidden))
    g = ad.tanh(ad.cols(pre, 2 * hidden, 3 * hidden))
    o = ad.sigmoid(ad.cols(pre, 3 * hidden, 4 * hidden))
    c_next = ad.muladd2(f, c, i, g)
    h_next = ad.mul(o, ad.tanh(c_next))
    return h_next, c_next
