"""Shared test oracles: finite differences and gradient comparison."""

import numpy as np


def central_difference(f, params: dict, eps: float = 1e-4) -> dict:
    """Gradient of scalar f(params) by central differences, per entry.

    Independent of the reverse-mode tape: evaluates f twice per coordinate.
    """
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            bumped = {k: v.copy() for k, v in params.items()}
            bumped[name][idx] = p[idx] + eps
            hi = f(bumped)
            bumped[name][idx] = p[idx] - eps
            lo = f(bumped)
            g[idx] = (hi - lo) / (2.0 * eps)
        grads[name] = g
    return grads


def assert_grads_close(got: dict, want: dict, rtol: float = 1e-4, atol: float = 1e-7):
    assert set(got) >= set(want), f"missing gradients: {set(want) - set(got)}"
    for name, w in want.items():
        g = got[name]
        assert g.shape == w.shape, f"{name}: shape {g.shape} vs {w.shape}"
        err = np.abs(g - w)
        tol = atol + rtol * np.maximum(np.abs(g), np.abs(w))
        bad = err > tol
        assert not bad.any(), (
            f"{name}: max abs err {err.max():.3e} (got {g[bad][:3]}, want {w[bad][:3]})"
        )
