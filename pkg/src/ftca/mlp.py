"""Small fully-connected networks with analytic backpropagation.

Used for the adversarial synthesizer (binary cross-entropy losses) and the
MLP regression backend (squared loss). Losses average over every output
entry; log arguments are clamped to [LOG_CLAMP_LO, 1] to stay finite, with
zero gradient outside the open clamp interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

RELU = "relu"
TANH = "tanh"
IDENTITY = "identity"
SIGMOID = "sigmoid"

BCE_REAL = "bce_real"
BCE_FAKE = "bce_fake"
GENERATOR_NONSATURATING = "generator_nonsaturating"
SQUARED = "squared"

LOG_CLAMP_LO = 1e-7
LOG_CLAMP_HI = 1.0

_HIDDEN_ACTS = (RELU, TANH)
_OUTPUT_ACTS = (IDENTITY, SIGMOID, TANH)


@dataclass(frozen=True)
class MlpParams:
    """Weights and biases per layer plus activation tags."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    hidden_activation: str = RELU
    output_activation: str = IDENTITY

    def __post_init__(self):
        if self.hidden_activation not in _HIDDEN_ACTS:
            raise ConfigError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in _OUTPUT_ACTS:
            raise ConfigError(f"unknown output activation {self.output_activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("weights and biases must pair up, one per layer")
        ws, bs = [], []
        prev_out = None
        for W, b in zip(self.weights, self.biases):
            W = np.asarray(W, dtype=float)
            b = np.asarray(b, dtype=float).ravel()
            if W.ndim != 2 or b.shape[0] != W.shape[1]:
                raise ShapeError(f"layer shapes inconsistent: W {W.shape}, b {b.shape}")
            if prev_out is not None and W.shape[0] != prev_out:
                raise ShapeError(f"layer input {W.shape[0]} != previous output {prev_out}")
            prev_out = W.shape[1]
            W = W.copy()
            b = b.copy()
            W.flags.writeable = False
            b.flags.writeable = False
            ws.append(W)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(W.shape[1] for W in self.weights)

    @property
    def param_count(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))


@dataclass
class MlpGradients:
    """Same shapes as MlpParams, plus the gradient w.r.t. the input batch."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    input: np.ndarray


def init_mlp(
    layer_sizes: tuple[int, ...],
    rng: np.random.Generator,
    hidden_activation: str = RELU,
    output_activation: str = IDENTITY,
) -> MlpParams:
    """He-style random initialization, deterministic given the generator."""
    if len(layer_sizes) < 2:
        raise ConfigError("need at least an input and an output layer size")
    ws, bs = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        ws.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return MlpParams(tuple(ws), tuple(bs), hidden_activation, output_activation)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == TANH:
        return np.tanh(z)
    if kind == SIGMOID:
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _activate_deriv(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return (z > 0).astype(float)
    if kind == TANH:
        return 1.0 - a * a
    if kind == SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(z)


def _forward_trace(p: MlpParams, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    pres, posts = [], [x]
    last = len(p.weights) - 1
    for i, (W, b) in enumerate(zip(p.weights, p.biases)):
        z = posts[-1] @ W + b
        kind = p.output_activation if i == last else p.hidden_activation
        pres.append(z)
        posts.append(_activate(z, kind))
    return pres, posts


def _check_input(p: MlpParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != p.layer_sizes[0]:
        raise ShapeError(f"input shape {x.shape} does not match first layer {p.layer_sizes[0]}")
    return x


def mlp_forward(p: MlpParams, x: np.ndarray) -> np.ndarray:
    """Deterministic forward pass over a batch (one sample per row)."""
    x = _check_input(p, x)
    return _forward_trace(p, x)[1][-1]


def _clamped_log(v: np.ndarray) -> np.ndarray:
    return np.log(np.clip(v, LOG_CLAMP_LO, LOG_CLAMP_HI))


def _clamped_log_grad(v: np.ndarray) -> np.ndarray:
    inside = (v > LOG_CLAMP_LO) & (v < LOG_CLAMP_HI)
    return np.where(inside, 1.0 / np.where(inside, v, 1.0), 0.0)


def mlp_loss(p: MlpParams, x: np.ndarray, loss_tag: str, targets: np.ndarray | None = None) -> float:
    """Scalar loss of the selected adversarial/regression term on a batch."""
    out = mlp_forward(p, x)
    if loss_tag == BCE_REAL or loss_tag == GENERATOR_NONSATURATING:
        return float(-np.mean(_clamped_log(out)))
    if loss_tag == BCE_FAKE:
        return float(-np.mean(_clamped_log(1.0 - out)))
    if loss_tag == SQUARED:
        if targets is None:
            raise ConfigError("squared loss requires targets")
        t = np.asarray(targets, dtype=float)
        if t.shape != out.shape:
            raise ShapeError(f"targets {t.shape} do not match output {out.shape}")
        return float(np.mean((out - t) ** 2))
    raise ConfigError(f"unknown loss tag {loss_tag!r}")


def _output_grad(out: np.ndarray, loss_tag: str, targets: np.ndarray | None) -> np.ndarray:
    n = out.size
    if loss_tag == BCE_REAL or loss_tag == GENERATOR_NONSATURATING:
        return -_clamped_log_grad(out) / n
    if loss_tag == BCE_FAKE:
        return _clamped_log_grad(1.0 - out) / n
    if loss_tag == SQUARED:
        if targets is None:
            raise ConfigError("squared loss requires targets")
        t = np.asarray(targets, dtype=float)
        if t.shape != out.shape:
            raise ShapeError(f"targets {t.shape} do not match output {out.shape}")
        return 2.0 * (out - t) / n
    raise ConfigError(f"unknown loss tag {loss_tag!r}")


def _backward(
    p: MlpParams, pres: list[np.ndarray], posts: list[np.ndarray], output_grad: np.ndarray
) -> MlpGradients:
    last = len(p.weights) - 1
    gws: list[np.ndarray] = [np.empty(0)] * len(p.weights)
    gbs: list[np.ndarray] = [np.empty(0)] * len(p.weights)
    delta = np.asarray(output_grad, dtype=float)
    for i in range(last, -1, -1):
        kind = p.output_activation if i == last else p.hidden_activation
        delta = delta * _activate_deriv(pres[i], posts[i + 1], kind)
        gws[i] = posts[i].T @ delta
        gbs[i] = delta.sum(axis=0)
        delta = delta @ p.weights[i].T
    return MlpGradients(tuple(gws), tuple(gbs), delta)


def mlp_backprop(p: MlpParams, x: np.ndarray, output_grad: np.ndarray) -> MlpGradients:
    """Backpropagate an upstream gradient on the network output.

    Returns parameter gradients and the gradient w.r.t. the input batch so
    a downstream network (the generator) can continue the chain.
    """
    x = _check_input(p, x)
    pres, posts = _forward_trace(p, x)
    if np.asarray(output_grad).shape != posts[-1].shape:
        raise ShapeError("output_grad shape does not match the network output")
    return _backward(p, pres, posts, output_grad)


def mlp_gradient(
    p: MlpParams, x: np.ndarray, loss_tag: str, targets: np.ndarray | None = None
) -> MlpGradients:
    """Analytic gradients of the tagged loss w.r.t. parameters and input."""
    x = _check_input(p, x)
    pres, posts = _forward_trace(p, x)
    return _backward(p, pres, posts, _output_grad(posts[-1], loss_tag, targets))


def sgd_step(p: MlpParams, g: MlpGradients, lr: float) -> MlpParams:
    return MlpParams(
        tuple(W - lr * gW for W, gW in zip(p.weights, g.weights)),
        tuple(b - lr * gb for b, gb in zip(p.biases, g.biases)),
        p.hidden_activation,
        p.output_activation,
    )
