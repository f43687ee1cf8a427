"""Physical-consistency audits for a frozen dynamics model.

Three complementary checks, reported together with accuracy metrics:

  * temperature response violation (TRV): inject HVAC-off and maximum-cooling
    sequences into each window and integrate every degree-step where the
    model's response moves the wrong way. Qualitative: any nonzero value
    means the model contradicts the sign of the heat balance.
  * Jacobian minimum: the smallest causal d(temp)/d(HVAC power) entry over a
    set of windows. Negative entries flag anti-monotone responses.
  * maximum mean discrepancy (MMD): kernel distance between the model's
    one-step (power change, temperature change) response pairs under a
    random excitation and the pairs observed in the raw data. Quantitative:
    smaller means the learned response is distributed like the real one.

The MMD estimator is the biased V-statistic (always non-negative). All three
kernel sums are accumulated in sorted order, which makes mmd2(P, Q) exactly
symmetric and mmd2(P, P) exactly zero regardless of sample order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError, MetricError
from .frames import TimeSeriesFrame
from .windows import PredictionWindow, build_windows


# ---------------------------------------------------------------------------
# accuracy metrics


def mae_mape(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    """Mean absolute error (same units) and mean absolute percentage error.

    MAPE divides by |truth|, which is scale-fragile for Celsius series;
    values within 1 C of zero are refused rather than silently amplified.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise MetricError(f"shape mismatch {pred.shape} vs {truth.shape}")
    if truth.size == 0:
        raise MetricError("empty series")
    if np.any(np.abs(truth) < 1.0):
        raise MetricError("MAPE undefined: |truth| < 1 C would dominate the mean")
    err = np.abs(pred - truth)
    return float(err.mean()), float((err / np.abs(truth)).mean() * 100.0)


# ---------------------------------------------------------------------------
# temperature response violation


def trv(
    model,
    windows: list[PredictionWindow],
    u_floor: float,
    u_ceiling: float,
) -> tuple[float, float]:
    """(trv_plus, trv_minus) in C h over all windows.

    u_ceiling (HVAC off, least cooling) must sit at or above every original
    input and u_floor (maximum cooling) at or below. trv_plus integrates
    steps where the less-cooled trajectory falls below the nominal one;
    trv_minus integrates steps where the more-cooled trajectory rises above
    it. Both are magnitudes: zero means no violation anywhere.
    """
    if not windows:
        raise ContractError("trv needs at least one window")
    if u_floor > u_ceiling:
        raise ContractError("u_floor must not exceed u_ceiling")
    M = windows[0].M
    dt_h = windows[0].frame.step_s / 3600.0
    for w in windows:
        u = w.future_u
        if u.min() < u_floor or u.max() > u_ceiling:
            raise ContractError(
                f"window u range [{u.min():.1f}, {u.max():.1f}] outside "
                f"[{u_floor}, {u_ceiling}]"
            )
    pred = model.predict(windows)
    up = model.predict_override(windows, np.full(M, u_ceiling))
    down = model.predict_override(windows, np.full(M, u_floor))
    plus = np.maximum(0.0, pred - up).sum() * dt_h
    minus = np.maximum(0.0, down - pred).sum() * dt_h
    return float(plus), float(minus)


# ---------------------------------------------------------------------------
# maximum mean discrepancy


def gaussian_kernel(x, y, sigma: float) -> float:
    """exp(-||x - y||^2 / (2 sigma^2)), in (0, 1]."""
    if sigma <= 0:
        raise ContractError("sigma must be positive")
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    d2 = float(((x - y) ** 2).sum())
    return float(np.exp(-d2 / (2.0 * sigma * sigma)))


def _gram(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def _sorted_mean(k: np.ndarray) -> float:
    # fixed ascending accumulation order: symmetric and order-independent
    return float(np.sort(k.ravel()).sum() / k.size)


def mmd2(p: np.ndarray, q: np.ndarray, sigma: float) -> float:
    """Biased (V-statistic) squared MMD with a Gaussian kernel; >= 0 always."""
    if sigma <= 0:
        raise ContractError("sigma must be positive")
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if p.shape[0] == 0 or q.shape[0] == 0:
        raise ContractError("mmd2 needs non-empty sample sets")
    if p.shape[1] != q.shape[1]:
        raise ContractError(f"sample dimension mismatch {p.shape[1]} vs {q.shape[1]}")
    a = _sorted_mean(_gram(p, p, sigma))
    b = _sorted_mean(_gram(q, q, sigma))
    c = _sorted_mean(_gram(p, q, sigma))
    v = (a + b) - 2.0 * c
    return v if v > 0.0 else 0.0


def mmd(p: np.ndarray, q: np.ndarray, sigma: float) -> float:
    return float(np.sqrt(mmd2(p, q, sigma)))


def median_pairwise_distance(z: np.ndarray) -> float:
    z = np.atleast_2d(z)
    d2 = ((z[:, None, :] - z[None, :, :]) ** 2).sum(axis=-1)
    iu = np.triu_indices(len(z), k=1)
    d = np.sqrt(d2[iu])
    med = float(np.median(d)) if d.size else 1.0
    return max(med, 1e-12)


# ---------------------------------------------------------------------------
# response-pair construction


@dataclass
class PqSettings:
    u_floor: float = -4000.0
    u_ceiling: float = 0.0
    n_windows: int = 64  # windows excited with random HVAC sequences
    n_pairs: int = 512  # per-set cap before standardization
    excitation_hold: int = 4  # steps each random load level is held
    sigma_policy: str = "median"  # "median" or a fixed float


def build_pq(
    model,
    frame: TimeSeriesFrame,
    seed,
    settings: PqSettings | None = None,
    return_raw: bool = False,
):
    """Model-response set P and data set Q of (du, dT) pairs, plus sigma.

    P: per window, a random test load (levels uniform in
    [u_floor, u_ceiling], each level held `excitation_hold` steps) is pushed
    through the model; the trajectory starting at the measured current
    temperature is then differenced exactly like the raw data. Q:
    consecutive differences of the raw frame's HVAC power and zone
    temperature (n - 1 pairs for a frame of n rows). Holding each level for
    a few steps keeps the excitation's power-change distribution comparable
    to real operation, which single-step white noise is not.

    Both sets are jointly standardized so the watt and degree coordinates
    weigh equally in the kernel; sigma follows the median-pairwise-distance
    heuristic unless fixed. Deterministic per seed.
    """
    st = settings or PqSettings()
    if st.excitation_hold < 1:
        raise ContractError("excitation_hold must be >= 1")
    rng = np.random.default_rng(seed)
    L, M = model.cfg.L, model.cfg.M
    ds = build_windows(frame, L, M, stride=1)
    if len(ds) < 1:
        raise ContractError("frame too short for the model horizon")
    n_w = min(st.n_windows, len(ds))
    picks = np.sort(rng.choice(len(ds), size=n_w, replace=False))
    wins = [ds[int(k)] for k in picks]
    n_levels = (M + st.excitation_hold - 1) // st.excitation_hold
    levels = rng.uniform(st.u_floor, st.u_ceiling, size=(n_w, n_levels))
    u_rand = np.repeat(levels, st.excitation_hold, axis=1)[:, :M]
    y = model.predict_override(wins, u_rand)
    y0 = np.array([[w.current("t_zone")] for w in wins])
    traj = np.concatenate([y0, y], axis=1)  # measured start + M predictions
    dy = np.diff(traj, axis=1)[:, :-1]  # dy_i spans the same rows as du_i
    du = np.diff(u_rand, axis=1)
    p_raw = np.stack([du.ravel(), dy.ravel()], axis=1)
    q_raw = np.stack([np.diff(frame.u_hvac), np.diff(frame.t_zone)], axis=1)

    def cap(pairs, n):
        if len(pairs) <= n:
            return pairs
        idx = np.sort(rng.choice(len(pairs), size=n, replace=False))
        return pairs[idx]

    p_raw = cap(p_raw, st.n_pairs)
    q_raw = cap(q_raw, st.n_pairs)
    both = np.vstack([p_raw, q_raw])
    mu = both.mean(axis=0)
    sd = np.maximum(both.std(axis=0), 1e-12)
    p_std = (p_raw - mu) / sd
    q_std = (q_raw - mu) / sd
    if st.sigma_policy == "median":
        sigma = median_pairwise_distance(np.vstack([p_std, q_std]))
    else:
        sigma = float(st.sigma_policy)
        if sigma <= 0:
            raise ContractError("fixed sigma must be positive")
    if return_raw:
        return p_std, q_std, sigma, p_raw, q_raw
    return p_std, q_std, sigma


# ---------------------------------------------------------------------------
# Jacobian audit


def jacobian_min(model, windows: list[PredictionWindow], chunk: int = 64) -> float:
    """Minimum causal (s <= t) Jacobian entry over the given windows."""
    if not windows:
        raise ContractError("jacobian_min needs at least one window")
    M = windows[0].M
    mask = np.tril_indices(M)
    lo = np.inf
    for k in range(0, len(windows), chunk):
        J = model.jacobian(windows[k : k + chunk])
        if J.ndim == 2:
            J = J[None]
        lo = min(lo, float(J[:, mask[0], mask[1]].min()))
    return lo


# ---------------------------------------------------------------------------
# the fused report


@dataclass
class ConsistencySettings:
    u_floor: float = -4000.0
    u_ceiling: float = 0.0
    n_trv_windows: int = 128
    n_jacobian_windows: int = 128
    pq_windows: int = 64
    pq_pairs: int = 512
    excitation_hold: int = 4
    sigma_policy: str = "median"
    seed: int = 0


@dataclass
class ConsistencyReport:
    variant: str
    mae: float
    mape: float
    trv_plus: float
    trv_minus: float
    jacobian_min: float
    mmd: float
    mmd2: float
    sigma: float
    n_windows_accuracy: int
    n_windows_trv: int
    n_windows_jacobian: int
    n_pairs_p: int
    n_pairs_q: int
    estimator: str
    u_floor: float
    u_ceiling: float
    seed: int
    config_hash: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ConsistencyReport":
        return cls(**json.loads(text))


def full_report(
    model,
    val_windows: list[PredictionWindow],
    frame: TimeSeriesFrame,
    settings: ConsistencySettings | None = None,
    config_hash: str = "",
) -> tuple[ConsistencyReport, np.ndarray, np.ndarray]:
    """Runs every audit and fuses the results; also returns the raw response
    pairs (P, Q) for scatter plotting."""
    st = settings or ConsistencySettings()
    if not val_windows:
        raise ContractError("full_report needs validation windows")
    pred = model.predict(val_windows)
    truth = np.stack([w.truth for w in val_windows])
    mae, mape = mae_mape(pred, truth)
    trv_wins = val_windows[: st.n_trv_windows]
    t_plus, t_minus = trv(model, trv_wins, st.u_floor, st.u_ceiling)
    jac_wins = val_windows[: st.n_jacobian_windows]
    j_min = jacobian_min(model, jac_wins)
    pq = PqSettings(
        u_floor=st.u_floor,
        u_ceiling=st.u_ceiling,
        n_windows=st.pq_windows,
        n_pairs=st.pq_pairs,
        excitation_hold=st.excitation_hold,
        sigma_policy=st.sigma_policy,
    )
    p_std, q_std, sigma, p_raw, q_raw = build_pq(model, frame, st.seed, pq, return_raw=True)
    m2 = mmd2(p_std, q_std, sigma)
    report = ConsistencyReport(
        variant=getattr(model, "variant", "unknown"),
        mae=mae,
        mape=mape,
        trv_plus=t_plus,
        trv_minus=t_minus,
        jacobian_min=j_min,
        mmd=float(np.sqrt(m2)),
        mmd2=m2,
        sigma=sigma,
        n_windows_accuracy=len(val_windows),
        n_windows_trv=len(trv_wins),
        n_windows_jacobian=len(jac_wins),
        n_pairs_p=len(p_std),
        n_pairs_q=len(q_std),
        estimator="gaussian-v-statistic",
        u_floor=st.u_floor,
        u_ceiling=st.u_ceiling,
        seed=st.seed,
        config_hash=config_hash,
    )
    return report, p_raw, q_raw


def save_pairs_csv(path, p_raw: np.ndarray, q_raw: np.ndarray) -> None:
    """Two-column response pairs with a set label, for external plotting."""
    lines = ["set,du_w,dt_c"]
    for row in p_raw:
        lines.append(f"P,{float(row[0])!r},{float(row[1])!r}")
    for row in q_raw:
        lines.append(f"Q,{float(row[0])!r},{float(row[1])!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
