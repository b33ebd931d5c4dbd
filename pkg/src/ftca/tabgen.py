"""Tabular data synthesis at the source node.

Two synthesizer kinds share one model container and one file format:

  * ``gan`` — a small fully-connected generator/discriminator pair trained
    adversarially on min-max normalized columns. Only the generator (plus
    the normalization stats it needs to denormalize samples) is kept; the
    discriminator is discarded after training and never serialized.
  * ``statistical`` — per-column mean/std with a Cholesky factor of the
    (shrinkage-regularized) correlation matrix; samples are Gaussian with
    matched first and second moments.

Features and labels are synthesized jointly, so a sampled dataset carries
the label columns the target domain is missing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import (
    MINMAX,
    ColumnStats,
    DomainDataset,
    FeatureSchema,
    NormalizationStats,
    fit_column_stats,
)
from .envelope import EnvelopeDoc, decode_envelope, encode_envelope
from .errors import ConfigError, DivergenceError, DomainError, EnvelopeError
from .mlp import (
    BCE_FAKE,
    BCE_REAL,
    GENERATOR_NONSATURATING,
    RELU,
    SIGMOID,
    TANH,
    MlpParams,
    init_mlp,
    mlp_backprop,
    mlp_forward,
    mlp_gradient,
    mlp_loss,
    sgd_step,
)

GAN = "gan"
STATISTICAL = "statistical"

_KIND_TO_ENVELOPE = {GAN: "gan-generator", STATISTICAL: "statistical-generator"}
_ENVELOPE_TO_KIND = {v: k for k, v in _KIND_TO_ENVELOPE.items()}

# Shrink the empirical correlation 1% toward identity before factorizing.
_CORR_SHRINKAGE = 0.01


@dataclass(frozen=True)
class GanTrainConfig:
    epochs: int = 400
    batch_size: int = 64
    noise_dim: int = 16
    learning_rate: float = 5e-3
    d_steps_per_g_step: int = 1
    hidden: tuple[int, ...] = (64, 64)
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "noise_dim", "d_steps_per_g_step"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")


@dataclass(frozen=True)
class GeneratorModel:
    """Serializable synthesizer; the only artifact that leaves the source node."""

    kind: str
    schema: FeatureSchema
    norm_stats: NormalizationStats
    noise_dim: int | None = None
    mlp: MlpParams | None = None
    column_means: np.ndarray | None = None
    column_stds: np.ndarray | None = None
    correlation_factor: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == GAN:
            if self.mlp is None or self.noise_dim is None:
                raise ConfigError("gan model needs mlp parameters and a noise dimension")
        elif self.kind == STATISTICAL:
            if self.column_means is None or self.column_stds is None or self.correlation_factor is None:
                raise ConfigError("statistical model needs moments and a correlation factor")
            for name in ("column_means", "column_stds", "correlation_factor"):
                arr = np.asarray(getattr(self, name), dtype=float).copy()
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)
        else:
            raise ConfigError(f"unknown generator kind {self.kind!r}")

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.schema.all_names


def _joint_matrix(data: DomainDataset) -> tuple[np.ndarray, tuple[str, ...]]:
    return data.all_columns(), data.schema.all_names


def _round_sig(v: float, digits: int, up: bool) -> float:
    if v == 0.0:
        return 0.0
    q = 10.0 ** (math.floor(math.log10(abs(v))) - digits + 1)
    return (math.ceil(v / q) if up else math.floor(v / q)) * q


def _widened_minmax(matrix: np.ndarray, names: tuple[str, ...]) -> NormalizationStats:
    """Min-max stats with the range widened outward to 6 significant digits.

    The stats travel inside the serialized model, so storing exact column
    extrema would leak individual training values verbatim; the widened
    range covers the data without reproducing any cell.
    """
    exact = fit_column_stats(matrix, names, MINMAX)
    cols = []
    for c in exact.columns:
        if c.degenerate:
            cols.append(c)
        else:
            lo = _round_sig(c.p1, 6, up=False)
            hi = _round_sig(c.p2, 6, up=True)
            cols.append(ColumnStats(c.name, MINMAX, lo, hi, degenerate=hi <= lo))
    return NormalizationStats(tuple(cols))


def train_gan(data: DomainDataset, cfg: GanTrainConfig = GanTrainConfig()) -> GeneratorModel:
    """Adversarial training of the two-network min-max game.

    The discriminator takes d_steps_per_g_step updates (real + fake
    cross-entropy terms) per generator update; the generator uses the
    non-saturating objective, backpropagated through the discriminator.
    Returns the generator only.
    """
    full, names = _joint_matrix(data)
    n, c = full.shape
    if cfg.batch_size > n:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds training size {n}")
    stats = _widened_minmax(full, names)
    # Train in tanh range: min-max to [0,1], then affine to [-1,1].
    scaled = 2.0 * stats.transform(full) - 1.0

    rng = np.random.default_rng(cfg.seed)
    gen = init_mlp((cfg.noise_dim, *cfg.hidden, c), rng, RELU, TANH)
    disc = init_mlp((c, *cfg.hidden, 1), rng, RELU, SIGMOID)

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n - cfg.batch_size + 1, cfg.batch_size):
            real = scaled[order[start : start + cfg.batch_size]]
            b = real.shape[0]
            for _ in range(cfg.d_steps_per_g_step):
                z = rng.standard_normal((b, cfg.noise_dim))
                fake = mlp_forward(gen, z)
                g_real = mlp_gradient(disc, real, BCE_REAL)
                g_fake = mlp_gradient(disc, fake, BCE_FAKE)
                disc = sgd_step(sgd_step(disc, g_real, cfg.learning_rate), g_fake, cfg.learning_rate)
            z = rng.standard_normal((b, cfg.noise_dim))
            fake = mlp_forward(gen, z)
            through_disc = mlp_gradient(disc, fake, GENERATOR_NONSATURATING)
            g_gen = mlp_backprop(gen, z, through_disc.input)
            gen = sgd_step(gen, g_gen, cfg.learning_rate)
        d_loss = mlp_loss(disc, scaled, BCE_REAL) + mlp_loss(
            disc, mlp_forward(gen, rng.standard_normal((n, cfg.noise_dim))), BCE_FAKE
        )
        if not np.isfinite(d_loss):
            raise DivergenceError(epoch, d_loss)

    return GeneratorModel(
        kind=GAN,
        schema=data.schema,
        norm_stats=stats,
        noise_dim=cfg.noise_dim,
        mlp=gen,
    )


def fit_statistical(data: DomainDataset) -> GeneratorModel:
    """Moment-matching baseline synthesizer (Gaussian with shrunk correlation)."""
    full, names = _joint_matrix(data)
    n, c = full.shape
    if n < 2:
        raise DomainError("statistical fit needs at least 2 rows")
    means = full.mean(axis=0)
    stds = full.std(axis=0)
    corr = np.eye(c)
    live = np.nonzero(stds > 0)[0]
    if live.size >= 2:
        sub = np.corrcoef(full[:, live], rowvar=False)
        corr[np.ix_(live, live)] = sub
    elif live.size == 1:
        corr[live[0], live[0]] = 1.0
    corr = (1.0 - _CORR_SHRINKAGE) * corr + _CORR_SHRINKAGE * np.eye(c)
    factor = np.linalg.cholesky(corr)
    return GeneratorModel(
        kind=STATISTICAL,
        schema=data.schema,
        norm_stats=_widened_minmax(full, names),
        column_means=means,
        column_stds=stds,
        correlation_factor=factor,
    )


def sample(model: GeneratorModel, n: int, seed: int) -> DomainDataset:
    """Draw n rows in the original data scale; pure function of (model, n, seed)."""
    if n < 1:
        raise DomainError(f"sample count must be positive, got {n}")
    rng = np.random.default_rng(seed)
    c = len(model.column_names)
    if model.kind == GAN:
        z = rng.standard_normal((n, model.noise_dim))
        scaled = mlp_forward(model.mlp, z)
        full = model.norm_stats.inverse((scaled + 1.0) / 2.0)
    else:
        z = rng.standard_normal((n, c))
        full = model.column_means + model.column_stds * (z @ model.correlation_factor.T)
    d = len(model.schema.feature_names)
    labels = full[:, d:] if model.schema.label_names else None
    return DomainDataset(model.schema, full[:, :d], labels)


def serialize_model(model: GeneratorModel) -> bytes:
    """Encode a generator into the versioned text envelope."""
    doc = EnvelopeDoc(_KIND_TO_ENVELOPE[model.kind], model.schema)
    doc.set_norm(model.norm_stats)
    if model.kind == GAN:
        doc.meta["noise-dim"] = str(model.noise_dim)
        doc.meta["hidden-activation"] = model.mlp.hidden_activation
        doc.meta["output-activation"] = model.mlp.output_activation
        doc.meta["layer-count"] = str(len(model.mlp.weights))
        for i, (W, b) in enumerate(zip(model.mlp.weights, model.mlp.biases)):
            doc.add_array(f"weights-{i}", W)
            doc.add_array(f"bias-{i}", b)
    else:
        doc.add_array("column-means", model.column_means)
        doc.add_array("column-stds", model.column_stds)
        doc.add_array("correlation-factor", model.correlation_factor)
    return encode_envelope(doc)


def deserialize_model(blob: bytes) -> GeneratorModel:
    """Inverse of serialize_model; raises EnvelopeError subclasses on bad input."""
    doc = decode_envelope(blob)
    return model_from_envelope(doc)


def model_from_envelope(doc: EnvelopeDoc) -> GeneratorModel:
    if doc.kind not in _ENVELOPE_TO_KIND:
        raise EnvelopeError(f"envelope kind {doc.kind!r} is not a generator model")
    kind = _ENVELOPE_TO_KIND[doc.kind]
    stats = doc.norm_stats()
    if stats is None:
        raise EnvelopeError("generator envelope is missing normalization stats")
    if kind == GAN:
        layer_count = int(doc.meta_value("layer-count"))
        weights = tuple(doc.array(f"weights-{i}") for i in range(layer_count))
        biases = tuple(doc.array(f"bias-{i}").ravel() for i in range(layer_count))
        mlp = MlpParams(
            weights,
            biases,
            doc.meta_value("hidden-activation"),
            doc.meta_value("output-activation"),
        )
        return GeneratorModel(
            kind=GAN,
            schema=doc.schema,
            norm_stats=stats,
            noise_dim=int(doc.meta_value("noise-dim")),
            mlp=mlp,
        )
    return GeneratorModel(
        kind=STATISTICAL,
        schema=doc.schema,
        norm_stats=stats,
        column_means=doc.array("column-means").ravel(),
        column_stds=doc.array("column-stds").ravel(),
        correlation_factor=doc.array("correlation-factor"),
    )
