"""Model interface: monotone construction, causality, Jacobians, round trips."""

import numpy as np
import pytest

from modnn import autodiff as ad
from modnn import testbed as tb
from modnn.errors import ContractError
from modnn.models import (
    ConstantModel,
    DynamicsModel,
    LinearResponseModel,
    ModelConfig,
    RcOracleModel,
    forward,
    hvac_jacobian,
    override_hvac,
)
from modnn.windows import NormStats, build_windows


SMALL = ModelConfig(variant="modnn", L=8, M=6, hidden=4, flux_width=2)
SMALL_LSTM = ModelConfig(variant="lstm", L=8, M=6, hidden=4)


@pytest.fixture(scope="module")
def frame():
    return tb.run_baseline(4, seed=13)


@pytest.fixture(scope="module")
def norm(frame):
    return NormStats.from_frame(frame)


def _windows(frame, cfg, n=5, stride=37):
    ds = build_windows(frame, cfg.L, cfg.M, stride=stride)
    return [ds[k] for k in range(n)]


def _model(cfg, norm, seed=0):
    return DynamicsModel.initialize(cfg, norm, seed=seed)


# ---------------------------------------------------------------------------
# structural monotonicity


def test_modnn_less_cooling_never_lowers_any_prediction(frame, norm):
    rng = np.random.default_rng(0)
    for seed in range(5):
        model = _model(SMALL, norm, seed=seed)
        for w in _windows(frame, SMALL, n=3):
            u = -rng.uniform(500, 2500, SMALL.M)
            bump = rng.uniform(0, 400, SMALL.M) * (rng.random(SMALL.M) < 0.7)
            y_lo = model.predict_override(w, u)
            y_hi = model.predict_override(w, u + bump)  # pointwise less cooling
            assert np.all(y_hi >= y_lo)


def test_modnn_max_cooling_override_pointwise_below_forward(frame, norm):
    model = _model(SMALL, norm)
    for w in _windows(frame, SMALL, n=4):
        base = forward(model, w)
        cold = override_hvac(model, w, np.full(SMALL.M, -4000.0))
        assert np.all(cold <= base)


def test_lstm_override_has_no_sign_guarantee_interface_only(frame, norm):
    # the unconstrained baseline must still produce a forecast of length M
    model = _model(SMALL_LSTM, norm)
    w = _windows(frame, SMALL_LSTM, n=1)[0]
    y = override_hvac(model, w, np.full(SMALL_LSTM.M, -4000.0))
    assert y.shape == (SMALL_LSTM.M,)
    assert np.all(np.isfinite(y))


def test_override_with_original_u_is_identical(frame, norm):
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm)
        w = _windows(frame, cfg, n=1)[0]
        np.testing.assert_array_equal(model.predict(w), model.predict_override(w, w.future_u))


def test_override_outside_model_bounds_rejected(frame, norm):
    model = _model(SMALL, norm)
    w = _windows(frame, SMALL, n=1)[0]
    with pytest.raises(ContractError):
        model.predict_override(w, np.full(SMALL.M, -9999.0))
    with pytest.raises(ContractError):
        model.predict_override(w, np.full(SMALL.M, +50.0))


def test_zero_horizon_returns_empty(frame, norm):
    cfg = ModelConfig(variant="modnn", L=8, M=0, hidden=4, flux_width=2)
    model = _model(cfg, norm)
    ds = build_windows(frame, cfg.L, cfg.M, stride=11)
    y = model.predict(ds[0])
    assert y.shape == (0,)


def test_untrained_model_with_zero_fluxes_predicts_flat(frame, norm):
    model = _model(SMALL, norm)
    for name in ("ext.ro.w", "ext.ro.b", "int.ro.w", "int.ro.b", "hvac.b", "hb.b"):
        model.params[name] = np.zeros_like(model.params[name])
    w = _windows(frame, SMALL, n=1)[0]
    # u held at the training mean so the normalized HVAC input is zero
    u = np.full(SMALL.M, norm.mean["u_hvac"])
    y = model.predict_override(w, u)
    np.testing.assert_allclose(y, w.current("t_zone"), atol=1e-9)


# ---------------------------------------------------------------------------
# determinism and causality


def test_forward_deterministic(frame, norm):
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm)
        w = _windows(frame, cfg, n=1)[0]
        np.testing.assert_array_equal(model.predict(w), model.predict(w))


def test_outputs_invariant_to_future_input_perturbations(frame, norm):
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm)
        w = _windows(frame, cfg, n=1)[0]
        base = model.predict(w)
        u = w.future_u.copy()
        u[-1] -= 1500.0  # perturb only the last step
        bumped = model.predict_override(w, u)
        np.testing.assert_array_equal(base[: cfg.M - 1], bumped[: cfg.M - 1])
        assert bumped[-1] != base[-1] or cfg.variant == "lstm"


# ---------------------------------------------------------------------------
# Jacobians


def test_jacobian_causal_entries_zero_above_diagonal(frame, norm):
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm)
        w = _windows(frame, cfg, n=1)[0]
        J = hvac_jacobian(model, w)
        assert J.shape == (cfg.M, cfg.M)
        upper = J[np.triu_indices(cfg.M, k=1)]
        np.testing.assert_array_equal(upper, 0.0)


def test_modnn_jacobian_nonnegative(frame, norm):
    for seed in range(3):
        model = _model(SMALL, norm, seed=seed)
        w = _windows(frame, SMALL, n=1)[0]
        J = model.jacobian(w)
        assert J[np.tril_indices(SMALL.M)].min() >= 0.0


def test_scalar_modnn_jacobian_equals_softplus_weight_product(frame):
    # 1-wide flux chain with identity normalization: every causal entry is
    # softplus(raw_hvac) * softplus(raw_hb)
    cfg = ModelConfig(variant="modnn", L=4, M=2, hidden=2, flux_width=1)
    ident = NormStats(
        mean={c: 0.0 for c in ("t_out", "solar", "occ", "u_hvac", "t_zone")},
        std={c: 1.0 for c in ("t_out", "solar", "occ", "u_hvac", "t_zone")},
    )
    model = DynamicsModel.initialize(cfg, ident, seed=3)
    model.params["ext.ro.w"][:] = 0.0
    model.params["ext.ro.b"][:] = 0.0
    model.params["int.ro.w"][:] = 0.0
    model.params["int.ro.b"][:] = 0.0
    model.params["hvac.raw_w"][:] = 0.3
    model.params["hb.raw_w"][:] = -0.4
    ds = build_windows(tb.run_baseline(1, seed=5), cfg.L, cfg.M, stride=7)
    J = model.jacobian(ds[0])
    sp = lambda x: np.log1p(np.exp(x))
    expect = sp(0.3) * sp(-0.4)
    for t in range(cfg.M):
        for s in range(cfg.M):
            want = expect if s <= t else 0.0
            assert abs(J[t, s] - want) < 1e-10


def test_jacobian_matches_finite_differences(frame, norm):
    eps = 1e-4
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm, seed=1)
        w = _windows(frame, cfg, n=1)[0]
        # keep the perturbed sequences strictly inside the actuator bounds
        w = w.with_u(np.clip(w.future_u, -5000.0, -1.0))
        J = model.jacobian(w)
        u0 = w.future_u.copy()
        for s in range(cfg.M):
            up, dn = u0.copy(), u0.copy()
            up[s] += eps
            dn[s] -= eps
            fd = (model.predict_override(w, up) - model.predict_override(w, dn)) / (2 * eps)
            err = np.abs(J[:, s] - fd)
            tol = 1e-7 + 1e-4 * np.maximum(np.abs(J[:, s]), np.abs(fd))
            assert np.all(err <= tol)


def test_taped_decode_matches_numpy_forward_bitwise(frame, norm):
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm, seed=2)
        wins = _windows(frame, cfg, n=3)
        plain = model.predict(wins)
        ctx = model.prepare_context(wins)
        tape = ad.Tape()
        u_var = tape.leaf(ctx[0].u_watts, name="u")
        ys = model.decode_on_tape(tape, ctx, u_var)
        taped = np.concatenate([y.value for y in ys], axis=1)
        np.testing.assert_array_equal(plain, taped)


# ---------------------------------------------------------------------------
# serialization


def test_save_load_preserves_forward_bit_exactly(frame, norm, tmp_path):
    for cfg in (SMALL, SMALL_LSTM):
        model = _model(cfg, norm, seed=4)
        w = _windows(frame, cfg, n=2)
        path = tmp_path / f"{cfg.variant}.json"
        model.save(path)
        loaded = DynamicsModel.load(path)
        np.testing.assert_array_equal(model.predict(w), loaded.predict(w))
        assert loaded.cfg == model.cfg


# ---------------------------------------------------------------------------
# diagnostic models


def test_linear_toy_predict_and_jacobian(frame):
    M = 4
    toy = LinearResponseModel(coeff=-0.001, M=M)
    ds = build_windows(frame, 4, M, stride=19)
    w = ds[0]
    y = toy.predict_override(w, np.full(M, -2000.0))
    y0 = w.current("t_zone")
    np.testing.assert_allclose(y, y0 + 2.0 * np.arange(1, M + 1), atol=1e-12)
    J = toy.jacobian(w)
    assert np.all(J[np.tril_indices(M)] == -0.001)


def test_constant_toy_flat_and_insensitive(frame):
    M = 4
    toy = ConstantModel(M=M)
    ds = build_windows(frame, 4, M, stride=19)
    w = ds[0]
    np.testing.assert_array_equal(toy.predict(w), np.full(M, w.current("t_zone")))
    np.testing.assert_array_equal(toy.predict_override(w, np.full(M, -3000.0)), toy.predict(w))
    assert np.all(toy.jacobian(w) == 0.0)


def test_rc_oracle_matches_simulator_on_logged_data(frame):
    M = 12
    rc = tb.RCParams()
    oracle = RcOracleModel(rc, M=M)
    ds = build_windows(frame, 4, M, stride=101)
    for k in range(min(4, len(ds))):
        w = ds[k]
        pred = oracle.predict(w)
        np.testing.assert_allclose(pred, w.truth, rtol=1e-12, atol=1e-9)
