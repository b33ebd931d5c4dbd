"""Adaptation-matrix solver: constrained MMD trace minimization.

Given normalized source and target feature matrices, fit the d×m mapping W
that minimizes

    tr(Wᵀ X L Xᵀ W) + lam ‖W‖²_F    subject to  Wᵀ X H Xᵀ W = I_m

where X stacks both domains column-wise, L is the MMD coefficient matrix and
H the centering matrix. Setting the Lagrangian derivative to zero turns this
into the generalized eigenproblem

    (X L Xᵀ + lam I) W = X H Xᵀ W Φ

whose solution is the eigenvectors of A = (X L Xᵀ + lam I)⁻¹ X H Xᵀ. The m
eigenvectors with the largest eigenvalues of A minimize the objective; the
Lagrange multipliers Φ are the reciprocals of those eigenvalues. B is
symmetric positive definite for lam > 0, so the pencil is solved by Cholesky
whitening of B followed by a symmetric eigensolve, which also makes the
eigenvectors B-orthonormal. Each retained column is then rescaled so the
variance constraint holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import NormalizationStats
from .errors import ConditioningError, ConfigError, DomainError, ShapeError
from .kernels import centering_matrix, coefficient_matrix

_SYMMETRY_TOL = 1e-8
_NULLSPACE_TOL = 1e-12


@dataclass(frozen=True)
class TcaConfig:
    """Solver hyperparameters. m=None selects the full feature dimension."""

    lam: float = 1.0
    m: int | None = None
    ridge_eps: float = 1e-10

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lam must be positive, got {self.lam}")
        if self.m is not None and self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m}")
        if not self.ridge_eps > 0:
            raise ConfigError(f"ridge_eps must be positive, got {self.ridge_eps}")


@dataclass(frozen=True)
class TcaMapping:
    """Fitted adaptation matrix with the stats needed to transform new data.

    W columns are ordered by descending eigenvalue of A and scaled so that
    Wᵀ (X H Xᵀ) W = I_m on the fitting data; column signs are canonical
    (first nonzero entry positive).
    """

    W: np.ndarray
    eigenvalues: np.ndarray
    n_s: int
    n_t: int
    norm_stats: NormalizationStats | None = None

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float).copy()
        W.flags.writeable = False
        object.__setattr__(self, "W", W)
        ev = np.asarray(self.eigenvalues, dtype=float).copy()
        ev.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def n_components(self) -> int:
        return self.W.shape[1]


def _check_symmetric(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if float(np.max(np.abs(M - M.T))) > _SYMMETRY_TOL * scale:
        raise DomainError(f"{name} is not symmetric within {_SYMMETRY_TOL}")
    return (M + M.T) / 2.0


def _canonical_signs(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.nonzero(np.abs(col) > _NULLSPACE_TOL * max(1.0, np.max(np.abs(col))))[0]
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return V


def generalized_sym_eig(
    B: np.ndarray, C: np.ndarray, ridge_eps: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of B⁻¹C for symmetric PD B and symmetric C.

    Returns eigenvalues in descending order and eigenvectors as columns,
    B-orthonormal (wᵢᵀ B wⱼ = δᵢⱼ). If the Cholesky factorization of B
    fails, a ridge of ridge_eps·tr(B)/d is added once before giving up.
    """
    B = _check_symmetric(B, "B")
    C = _check_symmetric(C, "C")
    if B.shape != C.shape:
        raise ShapeError(f"B {B.shape} and C {C.shape} must match")
    d = B.shape[0]
    try:
        chol = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        ridge = ridge_eps * float(np.trace(B)) / d
        try:
            chol = np.linalg.cholesky(B + ridge * np.eye(d))
        except np.linalg.LinAlgError:
            smallest = float(np.min(np.linalg.eigvalsh(B)))
            raise ConditioningError(
                f"B is not positive definite (smallest pivot {smallest:.3e}, "
                f"ridge {ridge:.3e} did not help)"
            ) from None
    # Whiten: eig of L⁻¹ C L⁻ᵀ gives the pencil C w = mu B w.
    Linv_C = np.linalg.solve(chol, C)
    M = np.linalg.solve(chol, Linv_C.T)
    M = (M + M.T) / 2.0
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = np.linalg.solve(chol.T, vecs[:, order])
    return vals, _canonical_signs(vecs)


def fit_tca(
    Xs: np.ndarray,
    Xt: np.ndarray,
    cfg: TcaConfig = TcaConfig(),
    norm_stats: NormalizationStats | None = None,
) -> TcaMapping:
    """Fit the adaptation matrix on normalized source/target features."""
    Xs = np.asarray(Xs, dtype=float)
    Xt = np.asarray(Xt, dtype=float)
    if Xs.ndim != 2 or Xt.ndim != 2 or Xs.shape[1] != Xt.shape[1]:
        raise ShapeError("Xs and Xt must be matrices with equal column counts")
    d = Xs.shape[1]
    m = cfg.m if cfg.m is not None else d
    if m > d:
        raise ConfigError(f"m={m} exceeds feature dimension d={d}")
    n_s, n_t = Xs.shape[0], Xt.shape[0]

    X = np.vstack([Xs, Xt]).T                      # d × (n_s + n_t)
    L = coefficient_matrix(n_s, n_t)
    H = centering_matrix(n_s + n_t)
    B = X @ L @ X.T + cfg.lam * np.eye(d)
    C = X @ H @ X.T
    B = (B + B.T) / 2.0
    C = (C + C.T) / 2.0

    vals, vecs = generalized_sym_eig(B, C, cfg.ridge_eps)
    W = vecs[:, :m].copy()
    kept = vals[:m].copy()
    # Eigenvectors come out B-orthonormal; rescale to the C constraint.
    for j in range(m):
        c = float(W[:, j] @ C @ W[:, j])
        if c < _NULLSPACE_TOL:
            raise ConditioningError(
                f"component {j} lies in the null space of the scatter matrix "
                f"(wᵀCw = {c:.3e}); reduce m"
            )
        W[:, j] /= np.sqrt(c)
    return TcaMapping(W=W, eigenvalues=kept, n_s=n_s, n_t=n_t, norm_stats=norm_stats)


def transform(mapping: TcaMapping, X: np.ndarray) -> np.ndarray:
    """Project rows of X into the adapted space: X @ W."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != mapping.input_dim:
        raise ShapeError(
            f"expected {mapping.input_dim} columns, got shape {X.shape}"
        )
    return X @ mapping.W


def constraint_residual(mapping: TcaMapping, Xs: np.ndarray, Xt: np.ndarray) -> float:
    """Max-abs entry of Wᵀ(X H Xᵀ)W − I_m for the given sample pair."""
    Xs = np.asarray(Xs, dtype=float)
    Xt = np.asarray(Xt, dtype=float)
    if Xs.ndim != 2 or Xt.ndim != 2 or Xs.shape[1] != Xt.shape[1]:
        raise ShapeError("Xs and Xt must be matrices with equal column counts")
    if Xs.shape[1] != mapping.input_dim:
        raise ShapeError("sample columns do not match the mapping input dimension")
    X = np.vstack([Xs, Xt]).T
    H = centering_matrix(X.shape[1])
    S = mapping.W.T @ (X @ H @ X.T) @ mapping.W
    return float(np.max(np.abs(S - np.eye(mapping.n_components))))


def objective_value(W: np.ndarray, Xs: np.ndarray, Xt: np.ndarray, lam: float) -> float:
    """tr(Wᵀ X L Xᵀ W) + lam ‖W‖²_F, the quantity fit_tca minimizes."""
    W = np.asarray(W, dtype=float)
    X = np.vstack([np.asarray(Xs, float), np.asarray(Xt, float)]).T
    L = coefficient_matrix(np.asarray(Xs).shape[0], np.asarray(Xt).shape[0])
    return float(np.trace(W.T @ X @ L @ X.T @ W) + lam * np.sum(W * W))


MAPPING_ENVELOPE_KIND = "tca-mapping"


def serialize_mapping(mapping: TcaMapping) -> bytes:
    """Encode a fitted mapping into the shared model-file envelope."""
    from .data import FeatureSchema
    from .envelope import EnvelopeDoc, encode_envelope

    if mapping.norm_stats is not None:
        names = mapping.norm_stats.names
    else:
        names = tuple(f"x{i}" for i in range(mapping.input_dim))
    doc = EnvelopeDoc(MAPPING_ENVELOPE_KIND, FeatureSchema(names))
    doc.set_norm(mapping.norm_stats)
    doc.meta["n-source"] = str(mapping.n_s)
    doc.meta["n-target"] = str(mapping.n_t)
    doc.add_array("mapping", mapping.W)
    doc.add_array("eigenvalues", mapping.eigenvalues)
    return encode_envelope(doc)


def deserialize_mapping(blob: bytes) -> TcaMapping:
    from .envelope import decode_envelope
    from .errors import EnvelopeError

    doc = decode_envelope(blob)
    if doc.kind != MAPPING_ENVELOPE_KIND:
        raise EnvelopeError(f"envelope kind {doc.kind!r} is not a tca mapping")
    return TcaMapping(
        W=doc.array("mapping"),
        eigenvalues=doc.array("eigenvalues").ravel(),
        n_s=int(doc.meta_value("n-source")),
        n_t=int(doc.meta_value("n-target")),
        norm_stats=doc.norm_stats(),
    )
