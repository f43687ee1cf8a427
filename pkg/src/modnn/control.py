"""Receding-horizon HVAC optimization through a frozen dynamics model.

The planning loss mirrors a classical MPC objective: a price-weighted
squared electrical-energy term plus squared-hinge penalties for actuator
bounds and the comfort band, averaged over scenarios and horizon steps.
Electrical power enters the objective in kW so the default weights put the
energy term and a fraction-of-a-degree comfort violation on comparable
scales.

Two controllers are built on that loss:

  * direct optimization: Adam on the M-step power sequence through the
    frozen model's decoder, re-projected into bounds each iterate, warm
    started from the previous step's shifted plan;
  * a control-law network: a squashed feed-forward policy mapping (current
    state, disturbance forecast, comfort band, price) to the M-step
    sequence, trained by back-propagating the same loss through the frozen
    model.

The closed loop runs either controller (or the on-off baseline) against the
RC testbed with simulator-perfect disturbance forecasts. The first L + 1
steps fall back to the on-off thermostat while the model's history window
fills; metrics are accumulated from `metric_start_day` onward, when the
receding-horizon controller has long been in charge.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import checkpoint
from .errors import ContractError, IntegrityError, MetricError, OptimizerError, TrainingError
from .frames import STEP_SECONDS, TimeSeriesFrame
from .optim import AdamState, adam_update
from .testbed import (
    DEFAULT_START,
    HvacParams,
    RCParams,
    SchedulePolicy,
    WeatherConfig,
    flow_from_power,
    hvac_from_flow,
    make_disturbances,
    onoff_controller,
    rc_step,
)
from .windows import NormStats, PredictionWindow

WATTS_PER_KW = 1000.0


# ---------------------------------------------------------------------------
# the MPC-style loss


@dataclass
class MpcLossConfig:
    price: np.ndarray  # (M,) unitless time-of-use multiplier
    band_low: np.ndarray  # (M,) C
    band_high: np.ndarray  # (M,) C
    cop: float = 3.0
    u_low: float = -2122.56  # W
    u_high: float = 0.0
    w_obj: float = 1.0
    w_input: float = 1e3
    w_comfort: float = 1e3

    def __post_init__(self):
        self.price = np.asarray(self.price, dtype=np.float64)
        self.band_low = np.asarray(self.band_low, dtype=np.float64)
        self.band_high = np.asarray(self.band_high, dtype=np.float64)
        if min(self.w_obj, self.w_input, self.w_comfort) < 0:
            raise ContractError("loss weights must be non-negative")
        if self.u_low > self.u_high:
            raise ContractError("u_low must not exceed u_high")
        if np.any(self.band_low > self.band_high):
            raise ContractError("comfort band lower edge above upper edge")


def _loss_terms(u, y, cfg: MpcLossConfig, n_rows: int, m: int):
    """Loss pieces over (B, M) power (W) and temperature (C); Var or ndarray."""
    inv = 1.0 / (n_rows * m)
    price = np.atleast_2d(cfg.price)
    band_lo = np.atleast_2d(cfg.band_low)
    band_hi = np.atleast_2d(cfg.band_high)
    u_kw = ad.scale(u, 1.0 / WATTS_PER_KW)
    cost_rate = ad.mul(u_kw, price * (1.0 / cfg.cop))
    obj = ad.scale(ad.sum_all(ad.mul(cost_rate, cost_rate)), inv * cfg.w_obj)
    over = ad.relu(ad.shift(u_kw, -cfg.u_high / WATTS_PER_KW))
    under = ad.relu(ad.scale(ad.shift(u_kw, -cfg.u_low / WATTS_PER_KW), -1.0))
    p1 = ad.scale(
        ad.sum_all(ad.add(ad.mul(over, over), ad.mul(under, under))), inv * cfg.w_input
    )
    hot = ad.relu(ad.sub(y, band_hi))
    cold = ad.relu(ad.sub(band_lo, y))
    p2 = ad.scale(
        ad.sum_all(ad.add(ad.mul(hot, hot), ad.mul(cold, cold))), inv * cfg.w_comfort
    )
    total = ad.add3(obj, p1, p2)
    return total, obj, p1, p2


def mpc_loss(u, y, cfg: MpcLossConfig) -> tuple[float, dict]:
    """Scalar loss and its breakdown for a single plan (plain arrays)."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if u.shape != y.shape:
        raise ContractError(f"u shape {u.shape} != y shape {y.shape}")
    total, obj, p1, p2 = _loss_terms(u, y, cfg, u.shape[0], u.shape[1])
    breakdown = {
        "objective": float(np.asarray(obj).item()),
        "input_penalty": float(np.asarray(p1).item()),
        "comfort_penalty": float(np.asarray(p2).item()),
    }
    return float(np.asarray(total).item()), breakdown


# ---------------------------------------------------------------------------
# direct control-sequence optimization


@dataclass
class OptSettings:
    iters: int = 200
    lr: float = 150.0  # Adam step scale in watts
    lr_decay: float = 0.995  # per-iteration exponential decay
    # fast-forgetting second moment: the gradient scale collapses once the
    # comfort hinge deactivates, and a long memory would freeze the iterate
    beta1: float = 0.9
    beta2: float = 0.9
    init: np.ndarray | None = None


@dataclass
class ControlPlan:
    u: np.ndarray  # (M,) W, inside bounds
    y: np.ndarray  # (M,) C predicted under u
    loss: float
    breakdown: dict
    iterations: int
    converged: bool


def optimize_controls(
    model,
    window: PredictionWindow,
    cfg: MpcLossConfig,
    opt: OptSettings | None = None,
) -> ControlPlan:
    """Gradient descent on the HVAC sequence through the frozen model.

    Every iterate is projected into [u_low, u_high]; the returned plan is the
    best iterate seen, so the result is never worse than the initialization.
    Deterministic given the initialization.
    """
    opt = opt or OptSettings()
    m = model.horizon
    if len(cfg.price) != m or len(cfg.band_low) != m:
        raise ContractError("loss config horizon does not match the model")
    u = np.zeros(m) if opt.init is None else np.asarray(opt.init, dtype=np.float64).copy()
    u = np.clip(u, cfg.u_low, cfg.u_high)
    ctx = model.prepare_context([window])
    adam = AdamState(lr=opt.lr, beta1=opt.beta1, beta2=opt.beta2, eps=1e-12)
    best_loss = math.inf
    best_u = u.copy()
    best_y = None
    best_breakdown: dict = {}
    last_improve = 0
    for k in range(opt.iters):
        tape = ad.Tape()
        u_var = tape.leaf(u[None, :], name="u")
        ys = model.decode_on_tape(tape, ctx, u_var)
        y_cat = ad.hstack(ys)
        total, obj, p1, p2 = _loss_terms(u_var, y_cat, cfg, 1, m)
        value = float(total.value[0, 0])
        if not np.isfinite(value):
            raise OptimizerError(f"non-finite loss at iterate {k}")
        if value < best_loss:
            best_loss = value
            best_u = u.copy()
            best_y = y_cat.value[0].copy()
            best_breakdown = {
                "objective": float(obj.value[0, 0]),
                "input_penalty": float(p1.value[0, 0]),
                "comfort_penalty": float(p2.value[0, 0]),
            }
            last_improve = k
        grads = ad.forward_backward(tape, total)
        adam.lr = opt.lr * opt.lr_decay**k
        stepped = adam_update(adam, {"u": u[None, :]}, {"u": grads["u"]})
        u = np.clip(stepped["u"][0], cfg.u_low, cfg.u_high)
    if best_y is None:  # zero iterations: evaluate the initialization once
        y0 = model.predict_override(window, u)
        best_loss, best_breakdown = mpc_loss(u[None, :], y0[None, :], cfg)
        best_u, best_y = u.copy(), y0
    converged = (opt.iters - 1 - last_improve) >= max(1, opt.iters // 4)
    return ControlPlan(
        u=best_u,
        y=np.asarray(best_y),
        loss=best_loss,
        breakdown=best_breakdown,
        iterations=opt.iters,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# control-law network


@dataclass
class ControlScenario:
    window: PredictionWindow
    cfg: MpcLossConfig


class ControlLawNet:
    """Feed-forward policy with a tanh-squashed output, so every emitted
    power sequence lies strictly inside [u_low, u_high] by construction."""

    def __init__(self, params: dict, norm: NormStats, m: int, u_low: float, u_high: float, hidden: int):
        self.params = params
        self.norm = norm
        self.m = m
        self.u_low = u_low
        self.u_high = u_high
        self.hidden = hidden

    @classmethod
    def initialize(cls, norm: NormStats, m: int, u_low: float, u_high: float, hidden: int = 64, seed=0):
        from .layers import glorot

        rng = np.random.default_rng(seed)
        n_in = 3 + 6 * m
        params = {
            "pi.w1": glorot(rng, n_in, hidden),
            "pi.b1": np.zeros((1, hidden)),
            "pi.w2": glorot(rng, hidden, m) * 0.1,
            "pi.b2": np.zeros((1, m)),
        }
        return cls(params, norm, m, u_low, u_high, hidden)

    def features(self, scenarios: list[ControlScenario]) -> np.ndarray:
        """(B, 3 + 6M): current state, normalized disturbance forecast,
        scaled comfort band, price vector."""
        norm = self.norm
        rows = []
        for sc in scenarios:
            w, cfg = sc.window, sc.cfg
            hrs = w.hours("current")[0]
            ang = 2.0 * math.pi * hrs / 24.0
            zstats = (norm.mean["t_zone"], norm.std["t_zone"])
            row = np.concatenate(
                [
                    [norm.normalize("t_zone", w.current("t_zone")), math.sin(ang), math.cos(ang)],
                    norm.normalize("t_out", w.future("t_out")),
                    norm.normalize("solar", w.future("solar")),
                    norm.normalize("occ", w.future("occ")),
                    (cfg.band_low - zstats[0]) / zstats[1],
                    (cfg.band_high - zstats[0]) / zstats[1],
                    cfg.price / max(1.0, cfg.price.max()),
                ]
            )
            rows.append(row)
        return np.stack(rows)

    def emit(self, x):
        """Policy output in watts; works on arrays or tape Vars."""
        p = self.params
        h = ad.tanh(ad.affine(x, p["pi.w1"], p["pi.b1"]))
        z = ad.tanh(ad.affine(h, p["pi.w2"], p["pi.b2"]))
        half = 0.5 * (self.u_high - self.u_low)
        return ad.shift(ad.scale(z, half), self.u_low + half)

    def emit_taped(self, tape: ad.Tape, x: np.ndarray):
        p_vars = {k: tape.leaf(v, name=k) for k, v in self.params.items()}
        h = ad.tanh(ad.affine(tape.leaf(x), p_vars["pi.w1"], p_vars["pi.b1"]))
        z = ad.tanh(ad.affine(h, p_vars["pi.w2"], p_vars["pi.b2"]))
        half = 0.5 * (self.u_high - self.u_low)
        return ad.shift(ad.scale(z, half), self.u_low + half)

    def plan(self, scenario: ControlScenario) -> np.ndarray:
        return self.emit(self.features([scenario]))[0]

    def save(self, path, extra_meta: dict | None = None) -> None:
        meta = {
            "kind": "control-law",
            "m": self.m,
            "u_low": self.u_low,
            "u_high": self.u_high,
            "hidden": self.hidden,
            "norm": self.norm.to_dict(),
        }
        meta.update(extra_meta or {})
        checkpoint.save(path, self.params, meta)

    @classmethod
    def load(cls, path) -> "ControlLawNet":
        params, meta = checkpoint.load(path)
        if meta.get("kind") != "control-law":
            raise IntegrityError("checkpoint does not hold a control-law network")
        return cls(
            params,
            NormStats.from_dict(meta["norm"]),
            int(meta["m"]),
            float(meta["u_low"]),
            float(meta["u_high"]),
            int(meta["hidden"]),
        )


@dataclass
class PolicyHyper:
    epochs: int = 150
    lr: float = 3e-3
    hidden: int = 64
    seed: int = 0


def train_control_law(
    model, scenarios: list[ControlScenario], hyper: PolicyHyper | None = None
) -> tuple[ControlLawNet, list[float]]:
    """Backpropagate the planning loss through the frozen model into the
    policy. The model's parameters enter the tape as constants, so only the
    policy moves. Returns the net and the per-epoch loss curve."""
    hyper = hyper or PolicyHyper()
    if not scenarios:
        raise TrainingError("no scenarios to train on")
    m = model.horizon
    cfg0 = scenarios[0].cfg
    net = ControlLawNet.initialize(
        model.norm, m, cfg0.u_low, cfg0.u_high, hidden=hyper.hidden, seed=hyper.seed
    )
    x = net.features(scenarios)
    ctx = model.prepare_context([sc.window for sc in scenarios])
    batch_cfg = MpcLossConfig(
        price=np.stack([sc.cfg.price for sc in scenarios]),
        band_low=np.stack([sc.cfg.band_low for sc in scenarios]),
        band_high=np.stack([sc.cfg.band_high for sc in scenarios]),
        cop=cfg0.cop,
        u_low=cfg0.u_low,
        u_high=cfg0.u_high,
        w_obj=cfg0.w_obj,
        w_input=cfg0.w_input,
        w_comfort=cfg0.w_comfort,
    )
    adam = AdamState(lr=hyper.lr)
    curve = []
    for epoch in range(hyper.epochs):
        tape = ad.Tape()
        u_var = net.emit_taped(tape, x)
        ys = model.decode_on_tape(tape, ctx, u_var)
        y_cat = ad.hstack(ys)
        total, *_ = _loss_terms(u_var, y_cat, batch_cfg, len(scenarios), m)
        value = float(total.value[0, 0])
        if not np.isfinite(value):
            raise TrainingError(f"policy training diverged at epoch {epoch}")
        curve.append(value)
        grads = ad.forward_backward(tape, total)
        net.params = adam_update(adam, net.params, grads)
    return net, curve


def policy_loss(net: ControlLawNet, model, scenarios: list[ControlScenario]) -> float:
    """Average planning loss of the policy over scenarios (no gradients)."""
    x = net.features(scenarios)
    u = net.emit(x)
    y = model.predict_override([sc.window for sc in scenarios], u)
    cfg0 = scenarios[0].cfg
    batch_cfg = MpcLossConfig(
        price=np.stack([sc.cfg.price for sc in scenarios]),
        band_low=np.stack([sc.cfg.band_low for sc in scenarios]),
        band_high=np.stack([sc.cfg.band_high for sc in scenarios]),
        cop=cfg0.cop,
        u_low=cfg0.u_low,
        u_high=cfg0.u_high,
        w_obj=cfg0.w_obj,
        w_input=cfg0.w_input,
        w_comfort=cfg0.w_comfort,
    )
    total, *_ = _loss_terms(u, y, batch_cfg, len(scenarios), net.m)
    return float(np.asarray(total).item())


# ---------------------------------------------------------------------------
# schedules, metrics


@dataclass
class ControlSetup:
    days: int = 3
    metric_start_day: int = 2
    band_occupied: tuple[float, float] = (22.0, 24.5)
    band_unoccupied: tuple[float, float] = (16.0, 33.0)
    price_offpeak: float = 1.0
    price_peak: float = 5.0
    u_low: float = -2122.56
    u_high: float = 0.0
    w_obj: float = 1.0
    w_input: float = 1e3
    w_comfort: float = 1e3
    iters_first: int = 200
    iters_recede: int = 40
    lr: float = 150.0
    lr_decay: float = 0.995


def band_schedule(occ: np.ndarray, setup: ControlSetup) -> tuple[np.ndarray, np.ndarray]:
    """Comfort band per step from the occupancy channel."""
    home = occ > 0
    low = np.where(home, setup.band_occupied[0], setup.band_unoccupied[0])
    high = np.where(home, setup.band_occupied[1], setup.band_unoccupied[1])
    return low, high


def price_schedule(hours: np.ndarray, setup: ControlSetup, sched: SchedulePolicy) -> np.ndarray:
    p0, p1 = sched.peak_window
    peak = (hours >= p0) & (hours < p1)
    return np.where(peak, setup.price_peak, setup.price_offpeak)


def temp_violation(
    frame: TimeSeriesFrame,
    band_low: np.ndarray,
    band_high: np.ndarray,
    occupied_only: bool = True,
) -> float:
    """C h outside the band, occupied steps only by default."""
    n = len(frame)
    if len(band_low) < n or len(band_high) < n:
        raise ContractError("band schedule shorter than frame")
    dt_h = frame.step_s / 3600.0
    over = np.maximum(0.0, frame.t_zone - band_high[:n])
    under = np.maximum(0.0, band_low[:n] - frame.t_zone)
    mask = (frame.occ > 0) if occupied_only else np.ones(n, dtype=bool)
    return float(((over + under) * mask).sum() * dt_h)


def peak_load_reduction(
    frame: TimeSeriesFrame,
    baseline: TimeSeriesFrame,
    peak_window: tuple[float, float] = (15.0, 18.0),
) -> float:
    """Per-day percent reduction of the peak-hour electrical maximum,
    averaged over days."""
    if len(frame) != len(baseline):
        raise MetricError("frames must cover the same steps")
    hours = frame.hour_of_day()
    peak = (hours >= peak_window[0]) & (hours < peak_window[1])
    spd = frame.steps_per_day
    days = len(frame) // spd
    pcts = []
    for d in range(days):
        sel = np.zeros(len(frame), dtype=bool)
        sel[d * spd : (d + 1) * spd] = True
        sel &= peak
        if not sel.any():
            continue
        base_peak = float(baseline.p_elec[sel].max())
        if base_peak <= 0.0:
            raise MetricError(f"baseline peak power is zero on day {d}")
        pcts.append(100.0 * (1.0 - float(frame.p_elec[sel].max()) / base_peak))
    if not pcts:
        raise MetricError("no peak-hour steps in the frames")
    return float(np.mean(pcts))


# ---------------------------------------------------------------------------
# the closed loop


def closed_loop(
    controller: str,
    setup: ControlSetup,
    seed,
    rc: RCParams | None = None,
    hvac: HvacParams | None = None,
    sched: SchedulePolicy | None = None,
    wx: WeatherConfig | None = None,
    model=None,
    policy: ControlLawNet | None = None,
    t_init: float = 26.0,
) -> tuple[TimeSeriesFrame, dict]:
    """Run one controller against the testbed; returns (frame, metrics).

    controller: "onoff", "mpc" (direct optimization through `model`), or
    "policy" (a trained ControlLawNet planning through nothing at run time).
    Disturbance forecasts are simulator-perfect. Deterministic per seed.
    """
    rc = (rc or RCParams()).validate()
    hvac = (hvac or HvacParams()).validate()
    sched = (sched or SchedulePolicy()).validate()
    wx = wx or WeatherConfig()
    if controller == "mpc" and model is None:
        raise ContractError("mpc controller needs a model")
    if controller == "policy" and policy is None:
        raise ContractError("policy controller needs a trained network")

    if controller == "mpc":
        L, M = model.cfg.L, model.cfg.M
    elif controller == "policy":
        L, M = 0, policy.m
    else:
        L, M = 0, 0
    spd = int(round(86400.0 / STEP_SECONDS))
    n_sim = setup.days * spd
    horizon_days = setup.days + max(1, (M + spd - 1) // spd)
    t_out, solar, occ = make_disturbances(horizon_days, seed, sched, wx)
    n_total = len(t_out)
    band_low, band_high = band_schedule(occ, setup)
    h0 = DEFAULT_START.hour
    hours = (h0 + np.arange(n_total) * STEP_SECONDS / 3600.0) % 24.0
    price = price_schedule(hours, setup, sched)

    u_log = np.zeros(n_total)
    p_log = np.zeros(n_total)
    tz_log = np.zeros(n_total)
    live = TimeSeriesFrame(
        start=DEFAULT_START,
        step_s=STEP_SECONDS,
        t_out=t_out,
        solar=solar,
        occ=occ,
        u_hvac=u_log,
        p_elec=p_log,
        t_zone=tz_log,
    )

    warmup = L + 1
    t = float(t_init)
    on = False
    prev_plan: np.ndarray | None = None
    plans_solved = 0
    wall = time.perf_counter()
    for i in range(n_sim):
        tz_log[i] = t
        use_fallback = controller == "onoff" or i < warmup
        if use_fallback:
            setpoint = sched.setpoint_occupied if occ[i] > 0 else sched.setpoint_unoccupied
            on = onoff_controller(t, setpoint, sched.deadband, on)
            flow = hvac.flow_max if on else 0.0
        else:
            cfg = MpcLossConfig(
                price=price[i : i + M],
                band_low=band_low[i : i + M],
                band_high=band_high[i : i + M],
                cop=hvac.cop,
                u_low=setup.u_low,
                u_high=setup.u_high,
                w_obj=setup.w_obj,
                w_input=setup.w_input,
                w_comfort=setup.w_comfort,
            )
            window = PredictionWindow(live, start=i - L, L=L, M=M)
            if controller == "mpc":
                if prev_plan is None:
                    init = np.zeros(M)
                    iters = setup.iters_first
                else:
                    init = np.concatenate([prev_plan[1:], prev_plan[-1:]])
                    iters = setup.iters_recede
                plan = optimize_controls(
                    model,
                    window,
                    cfg,
                    OptSettings(iters=iters, lr=setup.lr, lr_decay=setup.lr_decay, init=init),
                )
                prev_plan = plan.u
                u_cmd = float(plan.u[0])
            else:
                u_cmd = float(policy.plan(ControlScenario(window, cfg))[0])
            flow = flow_from_power(u_cmd, t, hvac)
            plans_solved += 1
        u = hvac_from_flow(flow, t, hvac)
        u_log[i] = u
        p_log[i] = abs(u) / hvac.cop
        t = rc_step(t, t_out[i], solar[i], occ[i], u, rc)
    wall = time.perf_counter() - wall

    frame = live.slice(0, n_sim)
    lo = setup.metric_start_day * spd
    metric_frame = frame.slice(lo, n_sim)
    violation = temp_violation(metric_frame, band_low[lo:n_sim], band_high[lo:n_sim])
    per_day = []
    for d in range(setup.metric_start_day, setup.days):
        sl = frame.slice(d * spd, (d + 1) * spd)
        per_day.append(
            temp_violation(sl, band_low[d * spd : (d + 1) * spd], band_high[d * spd : (d + 1) * spd])
        )
    energy_kwh = float(metric_frame.p_elec.sum() * STEP_SECONDS / 3600.0 / 1000.0)
    metrics = {
        "controller": controller,
        "violation_ch": violation,
        "violation_per_day_ch": per_day,
        "energy_kwh": energy_kwh,
        "metric_start_day": setup.metric_start_day,
        "days": setup.days,
        "plans_solved": plans_solved,
        "wall_time_s": wall,
    }
    return frame, metrics


def compare_controllers(
    entries: dict[str, dict],
    setup: ControlSetup,
    seed,
    rc: RCParams | None = None,
    hvac: HvacParams | None = None,
    sched: SchedulePolicy | None = None,
    wx: WeatherConfig | None = None,
) -> tuple[dict[str, TimeSeriesFrame], dict]:
    """Run several controllers on the identical seed and fuse the metrics.

    entries: name -> {"controller": ..., "model": ..., "policy": ...}. An
    on-off baseline is always included and used as the peak-load reference.
    """
    frames: dict[str, TimeSeriesFrame] = {}
    metrics: dict[str, dict] = {}
    base_frame, base_metrics = closed_loop("onoff", setup, seed, rc, hvac, sched, wx)
    frames["baseline"] = base_frame
    metrics["baseline"] = base_metrics
    spd = base_frame.steps_per_day
    lo = setup.metric_start_day * spd
    base_metric_frame = base_frame.slice(lo, len(base_frame))
    for name, spec in entries.items():
        frame, m = closed_loop(
            spec.get("controller", "mpc"),
            setup,
            seed,
            rc,
            hvac,
            sched,
            wx,
            model=spec.get("model"),
            policy=spec.get("policy"),
        )
        m["peak_reduction_pct"] = peak_load_reduction(
            frame.slice(lo, len(frame)), base_metric_frame,
            peak_window=(sched or SchedulePolicy()).peak_window,
        )
        frames[name] = frame
        metrics[name] = m
    return frames, metrics


def metrics_to_json(metrics: dict, config_hash: str = "", zero_wall_time: bool = False) -> str:
    doc = {"config_hash": config_hash, "controllers": metrics}
    if zero_wall_time:
        doc = json.loads(json.dumps(doc))
        for m in doc["controllers"].values():
            if "wall_time_s" in m:
                m["wall_time_s"] = 0.0
    return json.dumps(doc, sort_keys=True, indent=1)
