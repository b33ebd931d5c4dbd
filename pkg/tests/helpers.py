"""Shared test oracles, kept independent of the code paths they check."""

import numpy as np


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic via explicit ECDFs."""
    a, b = np.sort(np.asarray(a).ravel()), np.sort(np.asarray(b).ravel())
    grid = np.concatenate([a, b])
    ca = np.searchsorted(a, grid, side="right") / a.size
    cb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(ca - cb)))


def random_feasible_mapping(C: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Random d×m matrix renormalized so that Wᵀ C W = I_m (C must be PD)."""
    d = C.shape[0]
    R = rng.standard_normal((d, m))
    G = R.T @ C @ R
    vals, vecs = np.linalg.eigh((G + G.T) / 2.0)
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
    return R @ inv_sqrt


def finite_diff_param_grads(loss_fn, params, h: float = 1e-5):
    """Central finite differences of a scalar loss over MlpParams entries.

    loss_fn takes an MlpParams and returns a float; returns (weight_grads,
    bias_grads) lists with the same shapes as the parameters.
    """
    from ftca.mlp import MlpParams

    def rebuild(ws, bs):
        return MlpParams(
            tuple(ws), tuple(bs), params.hidden_activation, params.output_activation
        )

    weight_grads, bias_grads = [], []
    ws = [W.copy() for W in params.weights]
    bs = [b.copy() for b in params.biases]
    for li, W in enumerate(ws):
        g = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            orig = W[idx]
            W[idx] = orig + h
            up = loss_fn(rebuild(ws, bs))
            W[idx] = orig - h
            down = loss_fn(rebuild(ws, bs))
            W[idx] = orig
            g[idx] = (up - down) / (2 * h)
        weight_grads.append(g)
    for li, b in enumerate(bs):
        g = np.zeros_like(b)
        for idx in np.ndindex(b.shape):
            orig = b[idx]
            b[idx] = orig + h
            up = loss_fn(rebuild(ws, bs))
            b[idx] = orig - h
            down = loss_fn(rebuild(ws, bs))
            b[idx] = orig
            g[idx] = (up - down) / (2 * h)
        bias_grads.append(g)
    return weight_grads, bias_grads
