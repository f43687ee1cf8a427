"""Sequence dynamics models behind one interface: a modularized network with
a strictly positive HVAC-to-temperature pathway, an unconstrained LSTM
baseline, and small diagnostic models used by the audits.

Modularized variant ("modnn"). Three flux modules feed a heat-balance layer:

    external   GRU over (t_out, solar, time-of-day)  -> latent flux vector
    internal   GRU over (occ, time-of-day)           -> latent flux vector
    hvac       positive linear over u_hvac           -> latent flux vector
    balance    positive linear over the summed flux  -> temperature increment

and the decoder integrates increments: y_t = y_{t-1} + balance(sum of flux).
Only the u -> increment chain is positivity-constrained (softplus weights, no
activation), which makes dy_t/du_s strictly positive for s <= t and exactly
zero for s > t, for any parameter values.

Each module is a true encoder-decoder pair: the encoder GRU additionally
consumes the measured zone-temperature history (how much heat the fabric
holds is unreadable from weather alone), runs one extra step on the current
measurement, and hands its state to the decoder GRU through a tanh state
map. The decoder never sees any temperature, measured or predicted, so the
only path from HVAC power to the output remains the positive chain.

LSTM baseline ("lstm"). One cell over all channels, encoder-decoder with the
same horizon, the decoder feeding back its own previous prediction. No
structural constraint, so its input-output derivatives can take either sign.

Both models run in two numerically identical modes: plain numpy for frozen
prediction, and on a tape when gradients are required (training, Jacobian
extraction, control optimization). For a frozen model only the operations
downstream of u land on the tape; the recurrent latents are precomputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import checkpoint
from .errors import ContractError, IntegrityError, ShapeError
from .layers import (
    gru_step,
    init_gru,
    init_linear,
    init_lstm,
    init_positive_linear,
    linear,
    lstm_step,
    positive_weight,
)
from .windows import NormStats, PredictionWindow

TWO_PI = 2.0 * math.pi


@dataclass
class ModelConfig:
    variant: str = "modnn"  # "modnn" | "lstm"
    L: int = 96
    M: int = 96
    hidden: int = 16
    flux_width: int = 4
    u_low: float = -6000.0  # widest HVAC power accepted by overrides, W
    u_high: float = 0.0

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "L": self.L,
            "M": self.M,
            "hidden": self.hidden,
            "flux_width": self.flux_width,
            "u_low": self.u_low,
            "u_high": self.u_high,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def init_params(cfg: ModelConfig, seed) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    p: dict[str, np.ndarray] = {}
    if cfg.variant == "modnn":
        # encoders see their module channels plus the measured zone temp
        p.update(init_gru(rng, 5, cfg.hidden, "ext.enc"))  # t_out, solar, tod, t_zone
        p.update(init_gru(rng, 4, cfg.hidden, "int.enc"))  # occ, tod, t_zone
        p.update(init_linear(rng, cfg.hidden, cfg.hidden, "ext.map"))
        p.update(init_linear(rng, cfg.hidden, cfg.hidden, "int.map"))
        p.update(init_gru(rng, 4, cfg.hidden, "ext.gru"))  # t_out, solar, tod sin/cos
        p.update(init_gru(rng, 3, cfg.hidden, "int.gru"))  # occ, tod sin/cos
        p.update(init_linear(rng, cfg.hidden, cfg.flux_width, "ext.ro"))
        p.update(init_linear(rng, cfg.hidden, cfg.flux_width, "int.ro"))
        p.update(init_positive_linear(1, cfg.flux_width, "hvac"))
        p.update(init_positive_linear(cfg.flux_width, 1, "hb"))
    elif cfg.variant == "lstm":
        p.update(init_lstm(rng, 7, cfg.hidden, "lstm"))
        p.update(init_linear(rng, cfg.hidden, 1, "ro"))
    else:
        raise ContractError(f"unknown variant {cfg.variant!r}")
    return p


# ---------------------------------------------------------------------------
# batched staging of windows into normalized numpy arrays


@dataclass
class StagedBatch:
    B: int
    hist_ext: np.ndarray  # (L, B, 5)  encoder channels incl. zone temp
    hist_int: np.ndarray  # (L, B, 4)
    hist_all: np.ndarray  # (L, B, 7)  lstm channel order
    cur_ext: np.ndarray  # (B, 5)
    cur_int: np.ndarray  # (B, 4)
    cur_all: np.ndarray  # (B, 7)
    fut_ext: np.ndarray  # (M, B, 4)  decoder channels, no temperature
    fut_int: np.ndarray  # (M, B, 3)
    fut_dist5: np.ndarray  # (M, B, 5)  lstm disturbances without u / y
    u_watts: np.ndarray  # (B, M) raw HVAC power
    y0_n: np.ndarray  # (B, 1) normalized current zone temperature
    truth: np.ndarray | None  # (B, M) C


def _tod(hours: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ang = TWO_PI * hours / 24.0
    return np.sin(ang), np.cos(ang)


def stage_windows(
    wins: list[PredictionWindow], cfg: ModelConfig, norm: NormStats
) -> StagedBatch:
    B = len(wins)
    L, M = cfg.L, cfg.M
    for w in wins:
        if w.L != L or w.M != M:
            raise ShapeError(f"window (L={w.L}, M={w.M}) does not match model (L={L}, M={M})")

    def gather(which: str, n: int):
        t_out = np.empty((B, n))
        solar = np.empty((B, n))
        occ = np.empty((B, n))
        u = np.empty((B, n))
        tz = np.empty((B, n))
        hrs = np.empty((B, n))
        for k, w in enumerate(wins):
            sel = (lambda ch: w.hist(ch)) if which == "hist" else (lambda ch: w.future(ch))
            t_out[k] = sel("t_out")
            solar[k] = sel("solar")
            occ[k] = sel("occ")
            u[k] = sel("u_hvac")
            tz[k] = sel("t_zone") if which == "hist" else 0.0
            hrs[k] = w.hours(which)
        return t_out, solar, occ, u, tz, hrs

    def normalize_stack(t_out, solar, occ, u, tz, hrs, with_t_zone: bool):
        sin, cos = _tod(hrs)
        t_out_n = norm.normalize("t_out", t_out)
        solar_n = norm.normalize("solar", solar)
        occ_n = norm.normalize("occ", occ)
        u_n = norm.normalize("u_hvac", u)
        if with_t_zone:
            tz_n = norm.normalize("t_zone", tz)
            ext = np.stack([t_out_n, solar_n, sin, cos, tz_n], axis=-1)
            intr = np.stack([occ_n, sin, cos, tz_n], axis=-1)
            alln = np.stack([t_out_n, solar_n, occ_n, sin, cos, u_n, tz_n], axis=-1)
        else:
            ext = np.stack([t_out_n, solar_n, sin, cos], axis=-1)
            intr = np.stack([occ_n, sin, cos], axis=-1)
            alln = np.stack([t_out_n, solar_n, occ_n, sin, cos], axis=-1)
        return ext, intr, alln

    h = gather("hist", L)
    hist_ext, hist_int, hist_all = normalize_stack(*h, with_t_zone=True)

    # current row: measured state plus the inputs applied over the next step
    cur = tuple(
        np.array([[w.current(ch)] for w in wins]) for ch in ("t_out", "solar", "occ", "u_hvac", "t_zone")
    )
    cur_hrs = np.array([w.hours("current") for w in wins])
    cur_ext, cur_int, cur_all = normalize_stack(*cur, cur_hrs, with_t_zone=True)

    f = gather("future", M)
    fut_ext, fut_int, fut_d5 = normalize_stack(*f, with_t_zone=False)

    u_watts = f[3]
    if not np.all(np.isfinite(u_watts)):
        raise ContractError("non-finite HVAC power in window")

    truth = None
    if all(len(w.truth) == M for w in wins) and M > 0:
        truth = np.stack([w.truth for w in wins])

    y0_n = norm.normalize("t_zone", np.array([[w.current("t_zone")] for w in wins]))

    def to_steps(a):  # (B, n, k) -> (n, B, k)
        return np.ascontiguousarray(np.swapaxes(a, 0, 1))

    return StagedBatch(
        B=B,
        hist_ext=to_steps(hist_ext),
        hist_int=to_steps(hist_int),
        hist_all=to_steps(hist_all),
        cur_ext=cur_ext[:, 0, :] if cur_ext.ndim == 3 else cur_ext,
        cur_int=cur_int[:, 0, :] if cur_int.ndim == 3 else cur_int,
        cur_all=cur_all[:, 0, :] if cur_all.ndim == 3 else cur_all,
        fut_ext=to_steps(fut_ext),
        fut_int=to_steps(fut_int),
        fut_dist5=to_steps(fut_d5),
        u_watts=u_watts,
        y0_n=y0_n,
        truth=truth,
    )


# ---------------------------------------------------------------------------
# forward passes (generic over numpy arrays / tape Vars)


def _zeros_like_hidden(B: int, H: int):
    return np.zeros((B, H))


def modnn_encode(p, cfg: ModelConfig, s: StagedBatch):
    """Per-module encoder over history plus one current-cell step, bridged to
    the decoder state through a tanh map."""
    H = cfg.hidden
    h_ext = _zeros_like_hidden(s.B, H)
    h_int = _zeros_like_hidden(s.B, H)
    for t in range(cfg.L):
        h_ext = gru_step(p, "ext.enc", s.hist_ext[t], h_ext, H)
        h_int = gru_step(p, "int.enc", s.hist_int[t], h_int, H)
    h_ext = gru_step(p, "ext.enc", s.cur_ext, h_ext, H)
    h_int = gru_step(p, "int.enc", s.cur_int, h_int, H)
    h_ext = ad.tanh(linear(p, "ext.map", h_ext))
    h_int = ad.tanh(linear(p, "int.map", h_int))
    return h_ext, h_int


def modnn_decode(p, cfg: ModelConfig, s: StagedBatch, u_n, h_ext, h_int, y0_n):
    """Temperature-increment rollout; returns a list of (B, 1) normalized
    zone temperatures. u_n is the normalized (B, M) HVAC sequence and is the
    only input the gradient chain to u passes through."""
    H = cfg.hidden
    w_hvac = positive_weight(p, "hvac")
    w_hb = positive_weight(p, "hb")
    b_hvac = p["hvac.b"]
    b_hb = p["hb.b"]
    y = y0_n
    ys = []
    for t in range(cfg.M):
        h_ext = gru_step(p, "ext.gru", s.fut_ext[t], h_ext, H)
        h_int = gru_step(p, "int.gru", s.fut_int[t], h_int, H)
        q_ext = linear(p, "ext.ro", h_ext)
        q_int = linear(p, "int.ro", h_int)
        u_t = ad.cols(u_n, t, t + 1) if isinstance(u_n, ad.Var) else u_n[:, t : t + 1]
        q_hvac = ad.affine(u_t, w_hvac, b_hvac)
        q_all = ad.add3(q_ext, q_int, q_hvac)
        inc = ad.affine(q_all, w_hb, b_hb)
        y = ad.add(y, inc)
        ys.append(y)
    return ys


def lstm_encode(p, cfg: ModelConfig, s: StagedBatch):
    H = cfg.hidden
    h = _zeros_like_hidden(s.B, H)
    c = _zeros_like_hidden(s.B, H)
    for t in range(cfg.L):
        h, c = lstm_step(p, "lstm", s.hist_all[t], h, c, H)
    h, c = lstm_step(p, "lstm", s.cur_all, h, c, H)
    return h, c


def lstm_decode(p, cfg: ModelConfig, s: StagedBatch, u_n, h, c, y0_n):
    """Encoder-decoder rollout feeding back the previous prediction."""
    H = cfg.hidden
    y = y0_n
    ys = []
    for t in range(cfg.M):
        u_t = ad.cols(u_n, t, t + 1) if isinstance(u_n, ad.Var) else u_n[:, t : t + 1]
        x = ad.hstack([s.fut_dist5[t], u_t, y]) if _any_var(u_t, y) else np.concatenate(
            [s.fut_dist5[t], u_t, y], axis=1
        )
        h, c = lstm_step(p, "lstm", x, h, c, H)
        y = linear(p, "ro", h)
        ys.append(y)
    return ys


def _any_var(*xs) -> bool:
    return any(isinstance(x, ad.Var) for x in xs)


# ---------------------------------------------------------------------------
# the frozen-model interface


class DynamicsModel:
    """A trained (or freshly initialized) sequence model; forward is pure."""

    def __init__(self, cfg: ModelConfig, params: dict[str, np.ndarray], norm: NormStats):
        self.cfg = cfg
        self.params = params
        self.norm = norm

    # -- construction -------------------------------------------------------

    @classmethod
    def initialize(cls, cfg: ModelConfig, norm: NormStats, seed=0) -> "DynamicsModel":
        return cls(cfg, init_params(cfg, seed), norm)

    def copy(self) -> "DynamicsModel":
        return DynamicsModel(self.cfg, {k: v.copy() for k, v in self.params.items()}, self.norm)

    @property
    def variant(self) -> str:
        return self.cfg.variant

    @property
    def horizon(self) -> int:
        return self.cfg.M

    @property
    def u_bounds(self) -> tuple[float, float]:
        return (self.cfg.u_low, self.cfg.u_high)

    # -- serialization ------------------------------------------------------

    def save(self, path, extra_meta: dict | None = None) -> None:
        meta = {
            "kind": "dynamics-model",
            "config": self.cfg.to_dict(),
            "norm": self.norm.to_dict(),
        }
        meta.update(extra_meta or {})
        checkpoint.save(path, self.params, meta)

    @classmethod
    def load(cls, path) -> "DynamicsModel":
        params, meta = checkpoint.load(path)
        if meta.get("kind") != "dynamics-model":
            raise IntegrityError("checkpoint does not hold a dynamics model")
        cfg = ModelConfig.from_dict(meta["config"])
        expected = set(init_params(cfg, 0))
        if set(params) != expected:
            raise IntegrityError("checkpoint parameters do not match the model layout")
        return cls(cfg, params, NormStats.from_dict(meta["norm"]))

    # -- staging helpers ----------------------------------------------------

    def _as_list(self, windows) -> list[PredictionWindow]:
        return [windows] if isinstance(windows, PredictionWindow) else list(windows)

    def stage(self, windows) -> StagedBatch:
        return stage_windows(self._as_list(windows), self.cfg, self.norm)

    def _check_u(self, u: np.ndarray) -> None:
        lo, hi = self.u_bounds
        if u.min() < lo - 1e-9 or u.max() > hi + 1e-9:
            raise ContractError(
                f"override u range [{u.min():.1f}, {u.max():.1f}] outside model bounds [{lo}, {hi}]"
            )

    # -- prediction (numpy fast path) ---------------------------------------

    def predict_staged(self, s: StagedBatch, u_watts: np.ndarray | None = None) -> np.ndarray:
        u = s.u_watts if u_watts is None else u_watts
        u_n = self.norm.normalize("u_hvac", u)
        if self.variant == "modnn":
            h_ext, h_int = modnn_encode(self.params, self.cfg, s)
            ys = modnn_decode(self.params, self.cfg, s, u_n, h_ext, h_int, s.y0_n)
        else:
            h, c = lstm_encode(self.params, self.cfg, s)
            ys = lstm_decode(self.params, self.cfg, s, u_n, h, c, s.y0_n)
        out = np.concatenate(ys, axis=1) if ys else np.zeros((s.B, 0))
        return self.norm.denormalize("t_zone", out)

    def predict(self, windows) -> np.ndarray:
        """Zone temperature forecast, C; (M,) for one window, (B, M) for many."""
        single = isinstance(windows, PredictionWindow)
        s = self.stage(windows)
        out = self.predict_staged(s)
        return out[0] if single else out

    def predict_override(self, windows, u_watts) -> np.ndarray:
        """Forecast with the future HVAC sequence replaced."""
        single = isinstance(windows, PredictionWindow)
        wins = self._as_list(windows)
        u = np.asarray(u_watts, dtype=np.float64)
        if u.ndim == 1:
            u = np.broadcast_to(u, (len(wins), self.cfg.M)).copy()
        if u.shape != (len(wins), self.cfg.M):
            raise ShapeError(f"override u shape {u.shape} != ({len(wins)}, {self.cfg.M})")
        self._check_u(u)
        s = self.stage(wins)
        out = self.predict_staged(s, u_watts=u)
        return out[0] if single else out

    # -- taped decoding for gradients w.r.t. u ------------------------------

    def prepare_context(self, windows) -> tuple[StagedBatch, tuple]:
        """Precompute everything upstream of u for a frozen model."""
        s = self.stage(windows)
        if self.variant == "modnn":
            state = modnn_encode(self.params, self.cfg, s)
        else:
            state = lstm_encode(self.params, self.cfg, s)
        return s, state

    def decode_on_tape(self, tape: ad.Tape, ctx, u_var: ad.Var) -> list[ad.Var]:
        """Decode with a taped (B, M) HVAC power leaf (watts); returns per-step
        (B, 1) zone temperatures in C as tape nodes."""
        s, state = ctx
        mu, sd = self.norm.mean["u_hvac"], self.norm.std["u_hvac"]
        u_n = ad.scale(ad.shift(u_var, -mu), 1.0 / sd)
        if self.variant == "modnn":
            ys = modnn_decode(self.params, self.cfg, s, u_n, state[0], state[1], s.y0_n)
        else:
            ys = lstm_decode(self.params, self.cfg, s, u_n, state[0], state[1], s.y0_n)
        mz, sz = self.norm.mean["t_zone"], self.norm.std["t_zone"]
        return [ad.shift(ad.scale(y, sz), mz) for y in ys]

    def jacobian(self, windows) -> np.ndarray:
        """d(zone temp at step t) / d(HVAC power at step s), C per W.

        (M, M) for one window, else (B, M, M). Entries with s > t are exactly
        zero: the decoder never looks at future inputs.
        """
        single = isinstance(windows, PredictionWindow)
        wins = self._as_list(windows)
        ctx = self.prepare_context(wins)
        s = ctx[0]
        tape = ad.Tape()
        u_var = tape.leaf(s.u_watts, name="u")
        ys = self.decode_on_tape(tape, ctx, u_var)
        sums = [ad.sum_all(y) for y in ys]
        J = np.zeros((s.B, self.cfg.M, self.cfg.M))
        for t, node in enumerate(sums):
            adjoints = tape.backward(node)
            J[:, t, :] = tape.adjoint(adjoints, u_var)
        return J[0] if single else J


# ---------------------------------------------------------------------------
# spec-level operation wrappers


def forward(model, window: PredictionWindow) -> np.ndarray:
    return model.predict(window)


def override_hvac(model, window: PredictionWindow, u_override) -> np.ndarray:
    return model.predict_override(window, u_override)


def hvac_jacobian(model, window: PredictionWindow) -> np.ndarray:
    return model.jacobian(window)


# ---------------------------------------------------------------------------
# diagnostic models (audit instruments, not trained)


class LinearResponseModel:
    """Affine response around the current temperature: each step's increment
    is `coeff * u_t` C. A negative coeff yields a deliberately anti-monotone
    model, reproducing the failure mode of an unconstrained baseline."""

    def __init__(self, coeff: float, M: int, u_low: float = -6000.0, u_high: float = 0.0):
        self.coeff = float(coeff)
        self.cfg = ModelConfig(variant="linear-toy", L=0, M=M, u_low=u_low, u_high=u_high)

    variant = "linear-toy"

    @property
    def horizon(self) -> int:
        return self.cfg.M

    @property
    def u_bounds(self) -> tuple[float, float]:
        return (self.cfg.u_low, self.cfg.u_high)

    def _y0_u(self, windows):
        single = isinstance(windows, PredictionWindow)
        wins = [windows] if single else list(windows)
        y0 = np.array([[w.current("t_zone")] for w in wins])
        u = np.stack([w.future_u for w in wins])
        return single, y0, u

    def predict(self, windows) -> np.ndarray:
        single, y0, u = self._y0_u(windows)
        out = y0 + self.coeff * np.cumsum(u, axis=1)
        return out[0] if single else out

    def predict_override(self, windows, u_watts) -> np.ndarray:
        single, y0, u = self._y0_u(windows)
        u = np.broadcast_to(np.asarray(u_watts, dtype=np.float64), u.shape)
        out = y0 + self.coeff * np.cumsum(u, axis=1)
        return out[0] if single else out

    def jacobian(self, windows) -> np.ndarray:
        single, y0, u = self._y0_u(windows)
        M = self.cfg.M
        J = np.tril(np.full((M, M), self.coeff))
        out = np.broadcast_to(J, (len(y0), M, M)).copy()
        return out[0] if single else out

    def prepare_context(self, windows):
        single, y0, u = self._y0_u(windows)
        return y0

    def decode_on_tape(self, tape: ad.Tape, ctx, u_var: ad.Var) -> list[ad.Var]:
        y0 = ctx
        y = tape.leaf(y0)
        ys = []
        for t in range(self.cfg.M):
            inc = ad.scale(ad.cols(u_var, t, t + 1), self.coeff)
            y = ad.add(y, inc)
            ys.append(y)
        return ys


class ConstantModel:
    """Predicts the current temperature forever; maximally insensitive."""

    variant = "constant-toy"

    def __init__(self, M: int, u_low: float = -6000.0, u_high: float = 0.0):
        self.cfg = ModelConfig(variant="constant-toy", L=0, M=M, u_low=u_low, u_high=u_high)

    @property
    def horizon(self) -> int:
        return self.cfg.M

    @property
    def u_bounds(self) -> tuple[float, float]:
        return (self.cfg.u_low, self.cfg.u_high)

    def predict(self, windows) -> np.ndarray:
        single = isinstance(windows, PredictionWindow)
        wins = [windows] if single else list(windows)
        out = np.repeat(
            np.array([[w.current("t_zone")] for w in wins]), self.cfg.M, axis=1
        )
        return out[0] if single else out

    def predict_override(self, windows, u_watts) -> np.ndarray:
        return self.predict(windows)

    def jacobian(self, windows) -> np.ndarray:
        single = isinstance(windows, PredictionWindow)
        wins = [windows] if single else list(windows)
        out = np.zeros((len(wins), self.cfg.M, self.cfg.M))
        return out[0] if single else out


class RcOracleModel:
    """The testbed physics wrapped as a dynamics model: rolls the RC update
    over a window's future disturbances. Ground truth for audit calibration."""

    variant = "rc-oracle"

    def __init__(self, rc, M: int, dt: float = 900.0, u_low: float = -6000.0, u_high: float = 0.0):
        self.rc = rc
        self.dt = dt
        self.cfg = ModelConfig(variant="rc-oracle", L=0, M=M, u_low=u_low, u_high=u_high)

    @property
    def horizon(self) -> int:
        return self.cfg.M

    @property
    def u_bounds(self) -> tuple[float, float]:
        return (self.cfg.u_low, self.cfg.u_high)

    def _roll(self, w: PredictionWindow, u: np.ndarray) -> np.ndarray:
        rc = self.rc
        t = w.current("t_zone")
        t_out = w.future("t_out")
        solar = w.future("solar")
        occ = w.future("occ")
        out = np.empty(self.cfg.M)
        for i in range(self.cfg.M):
            flux = (
                (t_out[i] - t) / rc.r_env
                + rc.a_solar * solar[i]
                + rc.q_person * occ[i]
                + rc.q_base
                + u[i]
            )
            t = t + self.dt / rc.c_zone * flux
            out[i] = t
        return out

    def predict(self, windows) -> np.ndarray:
        single = isinstance(windows, PredictionWindow)
        wins = [windows] if single else list(windows)
        out = np.stack([self._roll(w, w.future_u) for w in wins])
        return out[0] if single else out

    def predict_override(self, windows, u_watts) -> np.ndarray:
        single = isinstance(windows, PredictionWindow)
        wins = [windows] if single else list(windows)
        u = np.asarray(u_watts, dtype=np.float64)
        if u.ndim == 1:
            u = np.broadcast_to(u, (len(wins), self.cfg.M))
        out = np.stack([self._roll(w, u[k]) for k, w in enumerate(wins)])
        return out[0] if single else out
