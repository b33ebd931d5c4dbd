"""Kernel evaluations, Gram/coefficient/centering matrices, and MMD estimators.

The maximum mean discrepancy between a source sample Xs and a target sample
Xt can be computed two ways that agree for the linear kernel:

    kernel form:  tr(K L)   with K the joint Gram matrix and L the
                  block coefficient matrix weighting within/cross terms,
    mapped form:  squared norm of the gap between mapped sample means.

The adaptation solver works on the mapped (feature-space) form; the kernel
form is kept for diagnostics with linear and rbf kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ShapeError

LINEAR = "linear"
RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters. gamma=None means 1/d for rbf."""

    kind: str = LINEAR
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in (LINEAR, RBF):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")

    def effective_gamma(self, dim: int) -> float:
        return self.gamma if self.gamma is not None else 1.0 / dim


def median_heuristic_gamma(X: np.ndarray) -> float:
    """gamma = 1 / median squared pairwise distance (ignoring zeros)."""
    X = np.asarray(X, dtype=float)
    sq = _sq_dists(X, X)
    vals = sq[np.triu_indices_from(sq, k=1)]
    vals = vals[vals > 0]
    if vals.size == 0:
        raise DomainError("median heuristic undefined: all points identical")
    return 1.0 / float(np.median(vals))


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate k(x, y) for a single pair of vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"vector dimensions differ: {x.shape} vs {y.shape}")
    if spec.kind == LINEAR:
        return float(x @ y)
    gamma = spec.effective_gamma(x.size)
    d = x - y
    return float(np.exp(-gamma * (d @ d)))


def gram_matrix(spec: KernelSpec, Xs: np.ndarray, Xt: np.ndarray) -> np.ndarray:
    """Joint Gram matrix over stacked [Xs; Xt], source block first."""
    Xs = np.asarray(Xs, dtype=float)
    Xt = np.asarray(Xt, dtype=float)
    if Xs.ndim != 2 or Xt.ndim != 2:
        raise ShapeError("sample sets must be 2-D matrices")
    if Xs.shape[1] != Xt.shape[1]:
        raise ShapeError(f"column mismatch: {Xs.shape[1]} vs {Xt.shape[1]}")
    X = np.vstack([Xs, Xt])
    if spec.kind == LINEAR:
        K = X @ X.T
    else:
        gamma = spec.effective_gamma(X.shape[1])
        K = np.exp(-gamma * _sq_dists(X, X))
    return (K + K.T) / 2.0


def coefficient_matrix(n_s: int, n_t: int) -> np.ndarray:
    """Block matrix with 1/n_s², 1/n_t² on the diagonal blocks, -1/(n_s n_t) off."""
    if n_s < 1 or n_t < 1:
        raise DomainError(f"sample counts must be positive, got {n_s}, {n_t}")
    e = np.concatenate([np.full(n_s, 1.0 / n_s), np.full(n_t, -1.0 / n_t)])
    return np.outer(e, e)


def centering_matrix(n: int) -> np.ndarray:
    """H = I_n - (1/n) 11ᵀ; symmetric and idempotent."""
    if n < 1:
        raise DomainError(f"size must be positive, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def mmd_kernel_form(K: np.ndarray, L: np.ndarray) -> float:
    """tr(K L); nonnegative up to round-off for a PSD K and matched L."""
    K = np.asarray(K, dtype=float)
    L = np.asarray(L, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"K must be square, got {K.shape}")
    if K.shape != L.shape:
        raise ShapeError(f"size mismatch: K {K.shape} vs L {L.shape}")
    value = float(np.sum(K * L.T))
    if value < -1e-8:
        raise DomainError(f"tr(KL) = {value} is negative beyond round-off")
    return value


def mmd_mapped_form(W: np.ndarray, Xs: np.ndarray, Xt: np.ndarray) -> float:
    """Squared norm of the mapped mean gap, the feature-space MMD."""
    W = np.asarray(W, dtype=float)
    Xs = np.asarray(Xs, dtype=float)
    Xt = np.asarray(Xt, dtype=float)
    if Xs.ndim != 2 or Xt.ndim != 2 or Xs.shape[1] != Xt.shape[1]:
        raise ShapeError("sample sets must share their column dimension")
    if W.ndim != 2 or W.shape[0] != Xs.shape[1]:
        raise ShapeError(f"mapping rows {W.shape} do not match feature dim {Xs.shape[1]}")
    gap = (Xs.mean(axis=0) - Xt.mean(axis=0)) @ W
    return float(gap @ gap)


@dataclass(frozen=True)
class MmdMatrices:
    """K, L, H for one (Xs, Xt) pair, source rows first."""

    K: np.ndarray
    L: np.ndarray
    H: np.ndarray
    n_s: int
    n_t: int


def build_mmd_matrices(spec: KernelSpec, Xs: np.ndarray, Xt: np.ndarray) -> MmdMatrices:
    n_s, n_t = np.asarray(Xs).shape[0], np.asarray(Xt).shape[0]
    return MmdMatrices(
        K=gram_matrix(spec, Xs, Xt),
        L=coefficient_matrix(n_s, n_t),
        H=centering_matrix(n_s + n_t),
        n_s=n_s,
        n_t=n_t,
    )
