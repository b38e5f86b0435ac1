"""Input validation helpers shared across modules."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidScore, LengthMismatch

N_CLASSES = 4


def check_feature_matrix(X, *, dim: int | None = None, dtype=np.float64) -> np.ndarray:
    """Coerce to a finite 2-D float array, optionally enforcing column count."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if dim is not None and X.shape[1] != dim:
        raise DimensionMismatch(f"expected {dim} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch("feature matrix contains NaN or Inf")
    return X


def check_labels(y, n: int | None = None) -> np.ndarray:
    """Coerce to int64 severity labels in {0, 1, 2, 3}."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionMismatch(f"expected 1-D labels, got ndim={y.ndim}")
    if y.size and (not np.issubdtype(y.dtype, np.integer)):
        as_int = y.astype(np.int64)
        if not np.array_equal(as_int, y):
            raise InvalidScore("labels must be integers in {0, 1, 2, 3}")
        y = as_int
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= N_CLASSES):
        bad = y[(y < 0) | (y >= N_CLASSES)][0]
        raise InvalidScore(f"severity label {bad} outside {{0, 1, 2, 3}}")
    if n is not None and y.shape[0] != n:
        raise LengthMismatch(f"expected {n} labels, got {y.shape[0]}")
    return y


def check_raw_image(image) -> np.ndarray:
    """Validate an 8-bit raster image: (H, W), (H, W, 1) or (H, W, 3) uint8."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise DimensionMismatch(f"image must be uint8, got {image.dtype}")
    if image.ndim == 2:
        h, w = image.shape
    elif image.ndim == 3 and image.shape[2] in (1, 3):
        h, w = image.shape[:2]
    else:
        raise DimensionMismatch(
            f"image must be (H, W), (H, W, 1) or (H, W, 3), got {image.shape}"
        )
    if h == 0 or w == 0:
        raise DimensionMismatch("image has a zero dimension")
    return image


def check_prob_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (N_CLASSES,):
        raise DimensionMismatch(f"expected {N_CLASSES} probabilities, got shape {p.shape}")
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-6:
        raise DimensionMismatch("probabilities must be non-negative and sum to 1")
    return p
