"""Seeded geometric augmentation: rotation, shift, scale, horizontal flip.

Transforms are sampled uniformly within the configured ranges, composed
into one affine map about the image centre, and resampled bilinearly with
black (zero) fill outside the frame.  The draw order is pinned (rotation,
shift-x, shift-y, scale, flip) and every call consumes exactly five
uniforms, so streams stay aligned whatever the parameter values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import CounterRng
from .validation import check_raw_image


@dataclass(frozen=True)
class AugmentParams:
    max_rotation_deg: float = 10.0
    max_shift_frac: float = 0.1
    max_scale_delta: float = 0.1
    hflip_prob: float = 0.5

    def __post_init__(self):
        if self.max_rotation_deg < 0:
            raise ConfigError("max_rotation_deg must be >= 0")
        if not 0 <= self.max_shift_frac < 1:
            raise ConfigError("max_shift_frac must be in [0, 1)")
        if not 0 <= self.max_scale_delta < 1:
            raise ConfigError("max_scale_delta must be in [0, 1)")
        if not 0 <= self.hflip_prob <= 1:
            raise ConfigError("hflip_prob must be in [0, 1]")


def sample_transform(params: AugmentParams, rng: CounterRng):
    """Draw (rotation_deg, shift_x_frac, shift_y_frac, scale, flip)."""
    u = rng.uniforms(5)
    rotation = -params.max_rotation_deg + u[0] * 2.0 * params.max_rotation_deg
    shift_x = -params.max_shift_frac + u[1] * 2.0 * params.max_shift_frac
    shift_y = -params.max_shift_frac + u[2] * 2.0 * params.max_shift_frac
    scale = (1.0 - params.max_scale_delta) + u[3] * 2.0 * params.max_scale_delta
    flip = bool(u[4] < params.hflip_prob)
    return rotation, shift_x, shift_y, scale, flip


def _bilinear_gather(channel: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample one float64 channel at fractional coords, zero outside."""
    h, w = channel.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    wx = xs - x0
    wy = ys - y0

    out = np.zeros(xs.shape, dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            weight = (wx if dx else 1.0 - wx) * (wy if dy else 1.0 - wy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            xi_c = np.clip(xi, 0, w - 1)
            yi_c = np.clip(yi, 0, h - 1)
            out += weight * np.where(valid, channel[yi_c, xi_c], 0.0)
    return out


def apply_affine(
    image: np.ndarray,
    rotation_deg: float,
    shift_x_frac: float,
    shift_y_frac: float,
    scale: float,
    flip: bool,
) -> np.ndarray:
    """Apply flip -> scale -> rotate -> shift about the image centre.

    Output keeps the input's exact shape and dtype; uncovered pixels are 0.
    """
    image = check_raw_image(image)
    squeeze = image.ndim == 2
    stack = image[:, :, None] if squeeze else image
    h, w = stack.shape[:2]

    if rotation_deg == 0.0 and shift_x_frac == 0.0 and shift_y_frac == 0.0 and scale == 1.0:
        out = stack[:, ::-1] if flip else stack
        out = out.copy()
        return out[:, :, 0] if squeeze else out

    theta = math.radians(rotation_deg)
    fx = -1.0 if flip else 1.0
    # forward: dst = R(theta) @ diag(fx*s, s) @ (src - c) + c + t; sample the inverse
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    inv00 = cos_t / (fx * scale)
    inv01 = sin_t / (fx * scale)
    inv10 = -sin_t / scale
    inv11 = cos_t / scale
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    tx, ty = shift_x_frac * w, shift_y_frac * h

    dst_x, dst_y = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    rel_x = dst_x - cx - tx
    rel_y = dst_y - cy - ty
    src_x = inv00 * rel_x + inv01 * rel_y + cx
    src_y = inv10 * rel_x + inv11 * rel_y + cy

    out = np.empty_like(stack)
    for c in range(stack.shape[2]):
        sampled = _bilinear_gather(stack[:, :, c].astype(np.float64), src_x, src_y)
        out[:, :, c] = np.clip(np.rint(sampled), 0, 255).astype(np.uint8)
    return out[:, :, 0] if squeeze else out


def augment(image: np.ndarray, params: AugmentParams, rng: CounterRng) -> np.ndarray:
    """One randomly transformed copy of image; deterministic given rng state."""
    rotation, shift_x, shift_y, scale, flip = sample_transform(params, rng)
    return apply_affine(image, rotation, shift_x, shift_y, scale, flip)


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize with half-pixel-centre sampling; returns float32 (H, W, C).

    Grayscale input comes back as a single-channel stack.  Coordinates are
    clamped at the borders, so no fill value enters a resize.
    """
    image = check_raw_image(image)
    stack = image[:, :, None] if image.ndim == 2 else image
    h, w, n_ch = stack.shape

    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    grid_x, grid_y = np.meshgrid(xs, ys)

    out = np.empty((out_h, out_w, n_ch), dtype=np.float32)
    for c in range(n_ch):
        out[:, :, c] = _bilinear_gather(stack[:, :, c].astype(np.float64), grid_x, grid_y)
    return out
