"""Layer semantics: positivity guarantees, gate behavior, gradient checks."""

import math

import numpy as np
import pytest

from modnn import autodiff as ad
from modnn import layers
from modnn.errors import ShapeError

from helpers import assert_grads_close, central_difference


# ---------------------------------------------------------------------------
# strictly positive linear


def test_positive_linear_softplus_zero_is_ln2():
    p = {"pl.raw_w": np.zeros((1, 1)), "pl.b": np.zeros((1, 1))}
    y = layers.positive_linear(p, "pl", np.array([[1.0]]))
    assert y[0, 0] == pytest.approx(math.log(2.0), abs=1e-12)


def test_positive_linear_zero_input_returns_bias():
    rng = np.random.default_rng(1)
    p = {"pl.raw_w": rng.normal(size=(3, 2)), "pl.b": rng.normal(size=(1, 2))}
    y = layers.positive_linear(p, "pl", np.zeros((1, 3)))
    np.testing.assert_allclose(y, p["pl.b"], atol=1e-15)


def test_positive_linear_very_negative_raw_weight_stays_positive():
    p = {"pl.raw_w": np.array([[-10.0]]), "pl.b": np.zeros((1, 1))}
    w = layers.positive_weight(p, "pl")
    assert w[0, 0] == pytest.approx(math.log1p(math.exp(-10.0)), rel=1e-12)
    assert w[0, 0] == pytest.approx(4.5399e-5, rel=1e-3)
    assert w[0, 0] > 0.0


def test_positive_weight_never_zero_even_for_extreme_raw():
    for raw in (-50.0, -500.0, -800.0, -1e6):
        p = {"pl.raw_w": np.array([[raw]]), "pl.b": np.zeros((1, 1))}
        assert layers.positive_weight(p, "pl")[0, 0] > 0.0


def test_positive_linear_jacobian_strictly_positive():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        p = {"pl.raw_w": rng.normal(size=(4, 3)) * 3.0, "pl.b": rng.normal(size=(1, 3))}
        # dy_i/dx_j is exactly the effective weight matrix entry (j, i)
        w = layers.positive_weight(p, "pl")
        assert np.all(w > 0.0)


def test_positive_linear_composition_has_positive_end_to_end_jacobian():
    rng = np.random.default_rng(7)
    p = {}
    p.update({"a.raw_w": rng.normal(size=(2, 5)), "a.b": np.zeros((1, 5))})
    p.update({"b.raw_w": rng.normal(size=(5, 3)), "b.b": np.zeros((1, 3))})
    j = layers.positive_weight(p, "a") @ layers.positive_weight(p, "b")
    assert np.all(j > 0.0)


def test_positive_linear_shape_mismatch():
    p = {"pl.raw_w": np.zeros((3, 2)), "pl.b": np.zeros((1, 2))}
    with pytest.raises(ShapeError):
        layers.positive_linear(p, "pl", np.zeros((1, 4)))


def test_positive_init_target():
    assert math.log1p(math.exp(layers.RAW_POSITIVE_INIT)) == pytest.approx(0.1, abs=1e-12)


# ---------------------------------------------------------------------------
# GRU cell


def test_gru_zero_params_halves_hidden_state():
    h0 = np.array([[0.3, -0.8]])
    p = {k: np.zeros_like(v) for k, v in layers.init_gru(np.random.default_rng(0), 3, 2, "g").items()}
    h1 = layers.gru_step(p, "g", np.array([[5.0, -1.0, 2.0]]), h0, 2)
    np.testing.assert_allclose(h1, 0.5 * h0, atol=1e-15)


def test_gru_origin_fixed_point_with_zero_candidate_weights():
    rng = np.random.default_rng(2)
    p = layers.init_gru(rng, 3, 4, "g")
    p["g.w_n"][:] = 0.0
    p["g.u_n"][:] = 0.0
    p["g.b_n"][:] = 0.0
    h1 = layers.gru_step(p, "g", rng.normal(size=(1, 3)), np.zeros((1, 4)), 4)
    np.testing.assert_array_equal(h1, np.zeros((1, 4)))


def test_gru_output_finite_and_bounded():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        p = layers.init_gru(rng, 3, 4, "g")
        h = rng.uniform(-1, 1, size=(2, 4))
        for _ in range(50):
            h = layers.gru_step(p, "g", rng.normal(size=(2, 3)), h, 4)
        assert np.all(np.isfinite(h))
        assert np.max(np.abs(h)) <= 1.0 + 1e-12


def test_gru_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    x0 = rng.normal(size=(1, 2))
    h0 = rng.normal(size=(1, 2)) * 0.5
    p0 = layers.init_gru(rng, 2, 2, "g")

    def f(p):
        t = ad.Tape()
        pv = {k: t.leaf(v) for k, v in p.items()}
        h1 = layers.gru_step(pv, "g", t.leaf(x0), t.leaf(h0), 2)
        return ad.sum_all(ad.mul(h1, h1)).value[0, 0]

    t = ad.Tape()
    pv = t.leaves(p0)
    h1 = layers.gru_step(pv, "g", t.leaf(x0), t.leaf(h0), 2)
    grads = ad.forward_backward(t, ad.sum_all(ad.mul(h1, h1)))
    assert_grads_close(grads, central_difference(f, p0))


# ---------------------------------------------------------------------------
# LSTM cell


def test_lstm_zero_params_zero_state_stays_at_origin():
    p = {k: np.zeros_like(v) for k, v in layers.init_lstm(np.random.default_rng(0), 3, 2, "l").items()}
    h, c = layers.lstm_step(p, "l", np.array([[1.0, 2.0, 3.0]]), np.zeros((1, 2)), np.zeros((1, 2)), 2)
    np.testing.assert_array_equal(h, np.zeros((1, 2)))
    np.testing.assert_array_equal(c, np.zeros((1, 2)))


def test_lstm_saturated_forget_zero_input_keeps_cell():
    hidden = 3
    rng = np.random.default_rng(4)
    p = layers.init_lstm(rng, 2, hidden, "l")
    p["l.w"][:, 2 * hidden : 3 * hidden] = 0.0  # zero candidate weights
    p["l.u"][:, 2 * hidden : 3 * hidden] = 0.0
    b = np.zeros((1, 4 * hidden))
    b[0, 0:hidden] = -50.0  # input gate shut
    b[0, hidden : 2 * hidden] = 50.0  # forget gate saturated open
    p["l.b"] = b
    c0 = rng.normal(size=(1, hidden))
    _, c1 = layers.lstm_step(p, "l", rng.normal(size=(1, 2)), np.zeros((1, hidden)), c0, hidden)
    np.testing.assert_array_equal(c1, c0)


def test_lstm_gradients_match_finite_differences():
    rng = np.random.default_rng(12)
    x0 = rng.normal(size=(1, 2))
    h0 = rng.normal(size=(1, 2)) * 0.5
    c0 = rng.normal(size=(1, 2)) * 0.5
    p0 = layers.init_lstm(rng, 2, 2, "l")

    def f(p):
        t = ad.Tape()
        pv = {k: t.leaf(v) for k, v in p.items()}
        h1, c1 = layers.lstm_step(pv, "l", t.leaf(x0), t.leaf(h0), t.leaf(c0), 2)
        return ad.sum_all(ad.add(ad.mul(h1, h1), ad.mul(c1, c1))).value[0, 0]

    t = ad.Tape()
    pv = t.leaves(p0)
    h1, c1 = layers.lstm_step(pv, "l", t.leaf(x0), t.leaf(h0), t.leaf(c0), 2)
    grads = ad.forward_backward(t, ad.sum_all(ad.add(ad.mul(h1, h1), ad.mul(c1, c1))))
    assert_grads_close(grads, central_difference(f, p0))
