"""Regression backends for the mapped space, plus the MAE/RMSE/R² metrics.

Three interchangeable backends, each fit per label column:

  * ``poly`` — ridge regression on the full multivariate polynomial
    expansion (all cross terms up to total degree). Base features are
    standardized internally so the normal equations stay well conditioned
    regardless of the input scale; the intercept is not penalized.
  * ``knn``  — k-nearest-neighbor averaging with (distance, label)
    tie-breaking, which makes predictions invariant to any permutation of
    the training rows.
  * ``mlp``  — a small tanh network trained with SGD on the squared loss,
    with inputs and targets standardized internally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConditioningError,
    ConfigError,
    DivergenceError,
    DomainError,
    ShapeError,
    UndefinedScoreError,
)
from .mlp import IDENTITY, SQUARED, TANH, MlpParams, init_mlp, mlp_forward, mlp_gradient, mlp_loss, sgd_step

POLY = "poly"
KNN = "knn"
MLP = "mlp"


@dataclass(frozen=True)
class RegressorSpec:
    kind: str = POLY
    # poly
    degree: int = 2
    ridge_alpha: float = 1e-8
    # knn
    k: int = 5
    # mlp
    hidden: tuple[int, ...] = (32,)
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (POLY, KNN, MLP):
            raise ConfigError(f"unknown regressor kind {self.kind!r}")
        if self.degree < 1:
            raise ConfigError("degree must be >= 1")
        if self.ridge_alpha < 0:
            raise ConfigError("ridge_alpha must be >= 0")
        if self.k < 1:
            raise ConfigError("k must be >= 1")


@dataclass(frozen=True)
class FittedRegressor:
    spec: RegressorSpec
    input_dim: int
    params: dict


@dataclass(frozen=True)
class MetricsTriple:
    mae: float
    rmse: float
    r2: float


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ShapeError("X must be a 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def _poly_powers(d: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of every monomial with total degree <= degree."""
    powers = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            exp = [0] * d
            for idx in combo:
                exp[idx] += 1
            powers.append(tuple(exp))
    return powers


def _poly_design(Z: np.ndarray, powers: list[tuple[int, ...]]) -> np.ndarray:
    cols = [np.prod(Z ** np.asarray(p), axis=1) for p in powers]
    return np.column_stack(cols)


def _standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def fit(spec: RegressorSpec, X: np.ndarray, y: np.ndarray) -> FittedRegressor:
    """Train one backend on (X, y); y is a single label column."""
    X, y = _check_xy(X, y)
    n, d = X.shape
    if spec.kind == POLY:
        mean, scale = _standardize_fit(X)
        Z = (X - mean) / scale
        powers = _poly_powers(d, spec.degree)
        if spec.ridge_alpha == 0 and n < len(powers):
            raise ConditioningError(
                f"{n} samples cannot determine {len(powers)} polynomial terms without ridge"
            )
        phi = _poly_design(Z, powers)
        G = phi.T @ phi
        penalty = np.full(len(powers), spec.ridge_alpha)
        penalty[0] = 0.0  # intercept is not penalized
        G += np.diag(penalty)
        rhs = phi.T @ y
        try:
            chol = np.linalg.cholesky((G + G.T) / 2.0)
        except np.linalg.LinAlgError:
            raise ConditioningError(
                "normal equations are singular; raise ridge_alpha or lower degree"
            ) from None
        pivots = np.diag(chol)
        if (pivots.min() / pivots.max()) ** 2 < 1e-12:
            raise ConditioningError(
                "normal equations are numerically singular; raise ridge_alpha or lower degree"
            )
        coef = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        params = {"powers": powers, "coef": coef, "mean": mean, "scale": scale}
    elif spec.kind == KNN:
        if spec.k > n:
            raise ConfigError(f"k={spec.k} exceeds training size {n}")
        params = {"X": X.copy(), "y": y.copy()}
    else:
        params = _fit_mlp(spec, X, y)
    return FittedRegressor(spec=spec, input_dim=d, params=params)


def _fit_mlp(spec: RegressorSpec, X: np.ndarray, y: np.ndarray) -> dict:
    n = X.shape[0]
    x_mean, x_scale = _standardize_fit(X)
    y_mean, y_std = float(y.mean()), float(y.std())
    if y_std == 0.0:
        # Constant target: nothing to learn.
        return {"net": None, "x_mean": x_mean, "x_scale": x_scale, "y_mean": y_mean, "y_scale": 1.0}
    Z = (X - x_mean) / x_scale
    t = ((y - y_mean) / y_std)[:, None]
    rng = np.random.default_rng(spec.seed)
    net = init_mlp((X.shape[1], *spec.hidden, 1), rng, TANH, IDENTITY)
    batch = min(spec.batch_size, n)
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n - batch + 1, batch):
            idx = order[start : start + batch]
            g = mlp_gradient(net, Z[idx], SQUARED, t[idx])
            net = sgd_step(net, g, spec.learning_rate)
        loss = mlp_loss(net, Z, SQUARED, t)
        if not np.isfinite(loss):
            raise DivergenceError(epoch, loss)
    return {"net": net, "x_mean": x_mean, "x_scale": x_scale, "y_mean": y_mean, "y_scale": y_std}


def predict(f: FittedRegressor, X: np.ndarray) -> np.ndarray:
    """Deterministic predictions for each row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != f.input_dim:
        raise ShapeError(f"expected {f.input_dim} input columns, got shape {X.shape}")
    p = f.params
    if f.spec.kind == POLY:
        Z = (X - p["mean"]) / p["scale"]
        return _poly_design(Z, p["powers"]) @ p["coef"]
    if f.spec.kind == KNN:
        diffs = X[:, None, :] - p["X"][None, :, :]
        dists = np.sqrt(np.sum(diffs * diffs, axis=2))
        out = np.empty(X.shape[0])
        for i in range(X.shape[0]):
            order = np.lexsort((p["y"], dists[i]))
            out[i] = p["y"][order[: f.spec.k]].mean()
        return out
    if p["net"] is None:
        return np.full(X.shape[0], p["y_mean"])
    Z = (X - p["x_mean"]) / p["x_scale"]
    return mlp_forward(p["net"], Z).ravel() * p["y_scale"] + p["y_mean"]


def linear_coefficients(f: FittedRegressor) -> tuple[float, np.ndarray]:
    """(intercept, slopes) in raw input units; degree-1 poly models only."""
    if f.spec.kind != POLY or f.spec.degree != 1:
        raise ConfigError("linear_coefficients applies to degree-1 poly models")
    p = f.params
    coef, mean, scale = p["coef"], p["mean"], p["scale"]
    slopes = coef[1:] / scale
    intercept = float(coef[0] - np.sum(coef[1:] * mean / scale))
    return intercept, slopes


def metrics(y_true: np.ndarray, y_pred: np.ndarray) -> MetricsTriple:
    """MAE, RMSE, and R² (about the mean of y_true)."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size < 2:
        raise DomainError("metrics need at least 2 points")
    err = y_pred - y_true
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err * err)))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedScoreError("R² undefined: y_true is constant")
    r2 = 1.0 - float(np.sum(err * err)) / ss_tot
    assert rmse >= mae - 1e-12  # power-mean inequality
    assert r2 <= 1.0 + 1e-12
    return MetricsTriple(mae=mae, rmse=rmse, r2=r2)
