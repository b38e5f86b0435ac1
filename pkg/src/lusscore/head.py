"""The sole trainable component: dropout + a 4-way linear layer + softmax.

On fixed features this is multinomial logistic regression, trained with
mini-batch Adam on the analytic cross-entropy gradient.  All head math is
float64; features may arrive as float32 and are widened once.  Weights
start at zero: the objective is convex in (W, b), so initialization only
affects reproducibility, not the optimum.

Everything here is deterministic given (data, config.seed).  Per epoch the
sample order is reshuffled and each sample gets a fresh inverted-dropout
mask; the draw order (one permutation, then one mask block per batch) is
part of the contract.
"""

from __future__ import annotations

import struct
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CacheFileError,
    ConfigError,
    DimensionMismatch,
    EmptyTrainingSet,
    InconsistentDimensions,
)
from .rng import CounterRng
from .validation import N_CLASSES, check_feature_matrix, check_labels

HEAD_MAGIC = b"LUSH"
HEAD_VERSION = 1


@dataclass
class HeadParameters:
    """Weights (feature_dim x 4) and biases (4) of the linear layer."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[1] != N_CLASSES or self.b.shape != (N_CLASSES,):
            raise DimensionMismatch(
                f"head parameters must be (D, {N_CLASSES}) and ({N_CLASSES},), "
                f"got {self.W.shape} and {self.b.shape}"
            )
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise DimensionMismatch("head parameters contain NaN or Inf")

    @property
    def feature_dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def zeros(cls, feature_dim: int) -> "HeadParameters":
        return cls(np.zeros((feature_dim, N_CLASSES)), np.zeros(N_CLASSES))

    def copy(self) -> "HeadParameters":
        return HeadParameters(self.W.copy(), self.b.copy())


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 0.001
    dropout_rate: float = 0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    class_weights: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigError("adam betas must be in (0, 1)")
        if not self.adam_epsilon > 0:
            raise ConfigError("adam_epsilon must be > 0")


@dataclass
class AdamState:
    m_W: np.ndarray
    v_W: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, feature_dim: int) -> "AdamState":
        return cls(
            m_W=np.zeros((feature_dim, N_CLASSES)),
            v_W=np.zeros((feature_dim, N_CLASSES)),
            m_b=np.zeros(N_CLASSES),
            v_b=np.zeros(N_CLASSES),
        )


@dataclass(frozen=True)
class Prediction:
    image_id: str
    probs: np.ndarray
    predicted: int


@dataclass
class TrainResult:
    params: HeadParameters
    epoch_losses: list[float]
    seconds: float


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (max subtraction), any logit magnitude."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def apply_dropout(x: np.ndarray, rate: float, rng: CounterRng) -> np.ndarray:
    """Inverted dropout: zero with probability rate, scale survivors."""
    if rate == 0.0:
        return np.asarray(x, dtype=np.float64)
    u = rng.uniforms(x.size).reshape(x.shape)
    keep = u >= rate
    return np.asarray(x, dtype=np.float64) * keep / (1.0 - rate)


def forward(
    params: HeadParameters,
    x: np.ndarray,
    mode: str = "infer",
    dropout_rate: float = 0.0,
    rng: CounterRng | None = None,
) -> np.ndarray:
    """Class probabilities for one feature vector."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != params.feature_dim:
        raise DimensionMismatch(
            f"feature length {x.shape[0]} != head feature_dim {params.feature_dim}"
        )
    if mode == "train" and dropout_rate > 0.0:
        if rng is None:
            raise ConfigError("train-mode forward with dropout needs a generator")
        x = apply_dropout(x, dropout_rate, rng)
    elif mode not in ("train", "infer"):
        raise ConfigError(f"mode must be 'train' or 'infer', got {mode!r}")
    return softmax(x @ params.W + params.b)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log p(label), with probabilities floored at 1e-12 before the log."""
    p = float(np.asarray(probs).reshape(-1)[label])
    return -float(np.log(max(p, 1e-12)))


def _grad_from_probs(
    X: np.ndarray,
    probs: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    dz = probs.copy()
    dz[np.arange(y.shape[0]), y] -= 1.0
    if sample_weights is not None:
        dz *= np.asarray(sample_weights, dtype=np.float64)[:, None]
    return X.T @ dz / X.shape[0], dz.mean(axis=0)


def gradients(
    params: HeadParameters,
    dropped_features: np.ndarray,
    labels: np.ndarray,
    sample_weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch-mean gradient of cross-entropy over softmax.

    ``dropped_features`` is the batch after dropout; per sample the logit
    gradient is (p - onehot(label)), so dW = mean_i x_i dz_i^T and
    db = mean_i dz_i.
    """
    X = check_feature_matrix(dropped_features, dim=params.feature_dim)
    y = check_labels(labels, n=X.shape[0])
    if X.shape[0] == 0:
        raise EmptyTrainingSet("gradient of an empty batch")
    probs = softmax(X @ params.W + params.b)
    return _grad_from_probs(X, probs, y, sample_weights)


def adam_step(
    params: HeadParameters,
    state: AdamState,
    grads: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
) -> tuple[HeadParameters, AdamState]:
    """One bias-corrected Adam update; returns new (params, state)."""
    dW, db = grads
    b1, b2, eps, lr = (
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
        config.learning_rate,
    )
    t = state.t + 1
    m_W = b1 * state.m_W + (1.0 - b1) * dW
    v_W = b2 * state.v_W + (1.0 - b2) * dW * dW
    m_b = b1 * state.m_b + (1.0 - b1) * db
    v_b = b2 * state.v_b + (1.0 - b2) * db * db
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_W = params.W - lr * (m_W / c1) / (np.sqrt(v_W / c2) + eps)
    new_b = params.b - lr * (m_b / c1) / (np.sqrt(v_b / c2) + eps)
    return HeadParameters(new_W, new_b), AdamState(m_W, v_W, m_b, v_b, t)


def balanced_weights(labels: np.ndarray) -> np.ndarray:
    """Per-sample weights n / (k_present * count_class), sklearn convention."""
    counts = np.bincount(labels, minlength=N_CLASSES)
    present = counts > 0
    per_class = np.zeros(N_CLASSES)
    per_class[present] = labels.shape[0] / (present.sum() * counts[present])
    return per_class[labels]


def train(
    features: np.ndarray | Sequence[np.ndarray] | Callable[[int], np.ndarray],
    labels,
    config: TrainConfig,
) -> TrainResult:
    """Train the head from zero initialization.

    ``features`` is normally one (n, d) matrix used every epoch.  It may
    instead be a list of per-epoch matrices or a callable epoch -> matrix
    (same n and d each epoch, rows aligned with ``labels``), which is how
    the pipeline feeds refreshed augmented copies.
    """
    if callable(features):
        provider = features
    elif isinstance(features, np.ndarray):
        provider = lambda epoch: features
    else:
        per_epoch = list(features)
        if len(per_epoch) != config.epochs:
            raise InconsistentDimensions(
                f"got {len(per_epoch)} per-epoch feature matrices for {config.epochs} epochs"
            )
        provider = lambda epoch: per_epoch[epoch]

    first = check_feature_matrix(provider(0), dtype=np.float64)
    n, dim = first.shape
    if n == 0:
        raise EmptyTrainingSet("no training samples")
    y = check_labels(labels, n=n)
    weights = balanced_weights(y) if config.class_weights else None

    params = HeadParameters.zeros(dim)
    state = AdamState.zeros(dim)
    rng = CounterRng(config.seed)
    epoch_losses: list[float] = []

    start = time.perf_counter()
    for epoch in range(config.epochs):
        X = provider(epoch) if epoch > 0 else first
        X = check_feature_matrix(X, dtype=np.float64)
        if X.shape != (n, dim):
            raise InconsistentDimensions(
                f"epoch {epoch}: features are {X.shape}, expected {(n, dim)}"
            )
        order = rng.permutation(n)
        loss_sum = 0.0
        for lo in range(0, n, config.batch_size):
            rows = order[lo : lo + config.batch_size]
            Xb = apply_dropout(X[rows], config.dropout_rate, rng)
            yb = y[rows]
            wb = weights[rows] if weights is not None else None
            probs = softmax(Xb @ params.W + params.b)
            picked = np.maximum(probs[np.arange(rows.shape[0]), yb], 1e-12)
            sample_losses = -np.log(picked)
            if wb is not None:
                sample_losses = sample_losses * wb
            loss_sum += float(sample_losses.sum())
            grads = _grad_from_probs(Xb, probs, yb, wb)
            params, state = adam_step(params, state, grads, config)
        epoch_losses.append(loss_sum / n)
    seconds = time.perf_counter() - start
    return TrainResult(params=params, epoch_losses=epoch_losses, seconds=seconds)


def predict_proba(params: HeadParameters, features) -> np.ndarray:
    X = check_feature_matrix(features, dim=params.feature_dim)
    return softmax(X @ params.W + params.b)


def predict(
    params: HeadParameters, features, image_ids: Sequence[str] | None = None
) -> list[Prediction]:
    """Infer-mode predictions, order preserved; ties go to the lower class."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[0] == 0:
        return []
    probs = predict_proba(params, X)
    winners = np.argmax(probs, axis=1)  # argmax returns the first (lowest) max index
    if image_ids is None:
        image_ids = [""] * X.shape[0]
    return [
        Prediction(image_id=image_ids[i], probs=probs[i], predicted=int(winners[i]))
        for i in range(X.shape[0])
    ]


def save_head(params: HeadParameters, path: str | Path, fingerprint: bytes = b"\0" * 32) -> None:
    """Write the LUSH parameter file (little-endian, float64 weights)."""
    if len(fingerprint) != 32:
        raise CacheFileError("fingerprint must be 32 bytes")
    blob = bytearray()
    blob += HEAD_MAGIC
    blob += struct.pack("<I", HEAD_VERSION)
    blob += struct.pack("<I", params.feature_dim)
    blob += params.W.astype("<f8").tobytes()
    blob += params.b.astype("<f8").tobytes()
    blob += fingerprint
    Path(path).write_bytes(bytes(blob))


def load_head(
    path: str | Path, expected_fingerprint: bytes | None = None
) -> tuple[HeadParameters, bytes]:
    """Read a LUSH file; a fingerprint mismatch warns but does not fail."""
    data = Path(path).read_bytes()
    try:
        if data[:4] != HEAD_MAGIC:
            raise CacheFileError(f"{path}: bad magic {data[:4]!r}")
        (version,) = struct.unpack_from("<I", data, 4)
        if version != HEAD_VERSION:
            raise CacheFileError(f"{path}: unsupported head version {version}")
        (dim,) = struct.unpack_from("<I", data, 8)
        pos = 12
        W = np.frombuffer(data, dtype="<f8", count=dim * N_CLASSES, offset=pos)
        pos += 8 * dim * N_CLASSES
        b = np.frombuffer(data, dtype="<f8", count=N_CLASSES, offset=pos)
        pos += 8 * N_CLASSES
        fingerprint = data[pos : pos + 32]
        if len(fingerprint) != 32:
            raise CacheFileError(f"{path}: truncated fingerprint")
    except (struct.error, ValueError) as exc:
        raise CacheFileError(f"{path}: corrupt head file: {exc}") from exc
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        warnings.warn(
            f"{path}: head was trained against a different backbone fingerprint",
            stacklevel=2,
        )
    return HeadParameters(W.reshape(dim, N_CLASSES).copy(), b.copy()), fingerprint
