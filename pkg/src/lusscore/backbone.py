"""Frozen pretrained backbones: load an ONNX feature stack and extract vectors.

The three named backbones are pinned to their published input conventions;
``custom`` accepts any feature-emitting ONNX file with user-declared
geometry, which is how desk-scale tests run without the real weights.

Extraction is pure: resize to the square input size, replicate grayscale
to 3 channels, apply the registered preprocess mode, run the frozen graph,
and globally average-pool the final feature map unless the file already
emits a pooled vector (``pre_pooled``).
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .augment import AugmentParams, augment, resize_bilinear
from .cache import FeatureCache
from .data import ImageRecord
from .errors import (
    ConfigError,
    DataError,
    DimensionMismatch,
    InferenceFailure,
    LusScoreError,
    ModelFileUnreadable,
)
from .onnx import GraphExecutor, load_model
from .rng import CounterRng, derive_seed
from .validation import check_raw_image

PREPROCESS_MODES = ("scale_01_center", "scale_pm1", "mean_subtract")

# (input_size, feature_dim, preprocess_mode) as published for each backbone
BACKBONE_REGISTRY: dict[str, tuple[int, int, str]] = {
    "xception": (299, 2048, "scale_pm1"),
    "resnet50": (224, 2048, "mean_subtract"),
    "vgg16": (224, 512, "mean_subtract"),
}

IMAGENET_BGR_MEANS = np.array([103.939, 116.779, 123.68], dtype=np.float32)
IMAGENET_RGB_MEANS_01 = np.array([0.485, 0.456, 0.406], dtype=np.float32)


@dataclass(frozen=True)
class BackboneSpec:
    backbone_id: str
    model_file: str
    input_size: int
    feature_dim: int
    preprocess_mode: str
    pre_pooled: bool = False

    def __post_init__(self):
        if self.input_size <= 0 or self.feature_dim <= 0:
            raise ConfigError("input_size and feature_dim must be positive")
        if self.preprocess_mode not in PREPROCESS_MODES:
            raise ConfigError(f"preprocess_mode must be one of {PREPROCESS_MODES}")
        if self.backbone_id in BACKBONE_REGISTRY:
            pinned = BACKBONE_REGISTRY[self.backbone_id]
            if (self.input_size, self.feature_dim, self.preprocess_mode) != pinned:
                raise ConfigError(
                    f"{self.backbone_id} is pinned to (input_size, feature_dim, "
                    f"preprocess_mode) = {pinned}"
                )

    @classmethod
    def named(cls, backbone_id: str, model_file: str | Path, pre_pooled: bool = False):
        if backbone_id not in BACKBONE_REGISTRY:
            raise ConfigError(
                f"unknown backbone {backbone_id!r}; use one of "
                f"{sorted(BACKBONE_REGISTRY)} or build a custom spec"
            )
        size, dim, mode = BACKBONE_REGISTRY[backbone_id]
        return cls(backbone_id, str(model_file), size, dim, mode, pre_pooled)

    @classmethod
    def custom(
        cls,
        model_file: str | Path,
        input_size: int,
        feature_dim: int,
        preprocess_mode: str = "scale_pm1",
        pre_pooled: bool = False,
    ):
        return cls("custom", str(model_file), input_size, feature_dim, preprocess_mode, pre_pooled)


@dataclass(frozen=True)
class FeatureVector:
    image_id: str
    backbone_id: str
    values: np.ndarray
    augmented_copy_index: int = 0


def preprocess_fingerprint(model_bytes: bytes, input_size: int, preprocess_mode: str) -> bytes:
    """32-byte digest binding features to (weights, geometry, preprocessing)."""
    digest = hashlib.sha256(model_bytes).digest()
    h = hashlib.sha256()
    h.update(digest)
    h.update(struct.pack("<I", input_size))
    h.update(preprocess_mode.encode("utf-8"))
    return h.digest()


SYNTHETIC_FINGERPRINT = hashlib.sha256(b"lusscore-synthetic-features").digest()


class BackboneHandle:
    """A loaded frozen graph plus everything needed to run it deterministically."""

    def __init__(self, spec: BackboneSpec, executor: GraphExecutor, fingerprint: bytes):
        self.spec = spec
        self.executor = executor
        self.fingerprint = fingerprint
        self.n_extract_calls = 0
        inputs = [i for i in executor.input_infos]
        if len(inputs) != 1:
            raise ModelFileUnreadable(
                f"expected exactly one graph input, found {[i.name for i in inputs]}"
            )
        self.input_name = inputs[0].name
        self.layout = self._detect_layout(inputs[0].shape)

    @staticmethod
    def _detect_layout(shape) -> str:
        if shape is not None and len(shape) == 4:
            if shape[1] == 3:
                return "NCHW"
            if shape[3] == 3:
                return "NHWC"
        return "NCHW"  # convention when the declared shape is symbolic

    def infer_features(self, batch_hw3: np.ndarray) -> np.ndarray:
        """(N, H, W, 3) float32 -> (N, feature_dim) float32."""
        if self.layout == "NCHW":
            feed = np.ascontiguousarray(batch_hw3.transpose(0, 3, 1, 2))
        else:
            feed = np.ascontiguousarray(batch_hw3)
        self.n_extract_calls += 1
        outputs = self.executor.run({self.input_name: feed})
        return self._to_features(outputs[0])

    def _to_features(self, raw: np.ndarray) -> np.ndarray:
        dim = self.spec.feature_dim
        if raw.ndim == 4 and not self.spec.pre_pooled:
            if raw.shape[1] == dim:
                pooled = raw.mean(axis=(2, 3), dtype=np.float64)
            elif raw.shape[3] == dim:
                pooled = raw.mean(axis=(1, 2), dtype=np.float64)
            else:
                raise DimensionMismatch(
                    f"feature map shape {raw.shape} has no axis of length {dim}"
                )
            return pooled.astype(np.float32)
        flat = raw.reshape(raw.shape[0], -1)
        if flat.shape[1] != dim:
            raise DimensionMismatch(
                f"graph emits {flat.shape[1]} features, spec declares {dim}"
            )
        return flat.astype(np.float32)


def load_backbone(spec: BackboneSpec) -> BackboneHandle:
    """Load the model file, verify its output width, and return a handle."""
    path = Path(spec.model_file)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ModelFileUnreadable(f"cannot read model file {path}: {exc}") from exc
    model = load_model(raw)
    executor = GraphExecutor(model)
    fingerprint = preprocess_fingerprint(raw, spec.input_size, spec.preprocess_mode)
    handle = BackboneHandle(spec, executor, fingerprint)

    declared = _declared_feature_dim(executor, spec)
    if declared is not None:
        if declared != spec.feature_dim:
            raise DimensionMismatch(
                f"{spec.backbone_id}: graph output length {declared} != "
                f"declared feature_dim {spec.feature_dim}"
            )
    else:
        # symbolic output shape: probe with a zero image once, at load time
        probe = np.zeros((1, spec.input_size, spec.input_size, 3), dtype=np.float32)
        handle.infer_features(probe)
        handle.n_extract_calls = 0
    return handle


def _declared_feature_dim(executor: GraphExecutor, spec: BackboneSpec) -> int | None:
    outputs = executor.output_infos
    if len(outputs) != 1:
        raise ModelFileUnreadable(
            f"expected exactly one graph output, found {[o.name for o in outputs]}"
        )
    shape = outputs[0].shape
    if shape is None or any(d is None for d in shape[1:]):
        return None
    if len(shape) == 4 and not spec.pre_pooled:
        if shape[1] == spec.feature_dim or shape[3] == spec.feature_dim:
            return spec.feature_dim
        return shape[1]
    flat = 1
    for d in shape[1:]:
        flat *= d
    return flat


def preprocess_image(image: np.ndarray, spec: BackboneSpec) -> np.ndarray:
    """Resize, replicate channels, and scale per the registered mode."""
    image = check_raw_image(image)
    resized = resize_bilinear(image, spec.input_size, spec.input_size)
    if resized.shape[2] == 1:
        resized = np.repeat(resized, 3, axis=2)
    if spec.preprocess_mode == "scale_pm1":
        return resized / 127.5 - 1.0
    if spec.preprocess_mode == "mean_subtract":
        return resized[:, :, ::-1] - IMAGENET_BGR_MEANS  # RGB -> BGR, Caffe-style means
    # scale_01_center: map to [0, 1], then centre on the ImageNet channel means
    return resized / 255.0 - IMAGENET_RGB_MEANS_01


def extract(
    handle: BackboneHandle,
    image: np.ndarray,
    image_id: str = "",
    augmented_copy_index: int = 0,
) -> FeatureVector:
    """Map one raw image to its feature vector through the frozen graph."""
    prepared = preprocess_image(image, handle.spec)
    try:
        features = handle.infer_features(prepared[None])[0]
    except LusScoreError:
        raise
    except Exception as exc:
        raise InferenceFailure(f"backbone inference failed: {exc}") from exc
    if not np.all(np.isfinite(features)):
        raise InferenceFailure("backbone produced non-finite feature values")
    return FeatureVector(
        image_id=image_id,
        backbone_id=handle.spec.backbone_id,
        values=features,
        augmented_copy_index=augmented_copy_index,
    )


def load_image(path: str | Path) -> np.ndarray:
    """Decode a raster image file to uint8 (H, W) or (H, W, 3)."""
    from PIL import Image

    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB" if ("A" in img.mode or len(img.mode) > 2) else "L")
            return np.asarray(img, dtype=np.uint8)
    except OSError as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from exc


def extract_all(
    handle: BackboneHandle,
    records: Sequence[ImageRecord],
    image_loader: Callable[[ImageRecord], np.ndarray],
    cache: FeatureCache,
    *,
    copies: int = 0,
    augment_params: AugmentParams | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> FeatureCache:
    """Fill the cache with copies 0..copies for every record.

    Copy 0 is the unaugmented image; copy c >= 1 is augmented with a
    generator derived from (seed, image_id, c), so results are identical
    for any worker count and warm entries are never recomputed.
    """
    if copies > 0 and augment_params is None:
        raise ConfigError("augmented copies requested without AugmentParams")
    todo = [
        (record, c)
        for record in records
        for c in range(copies + 1)
        if (record.image_id, c) not in cache
    ]

    def compute(item: tuple[ImageRecord, int]):
        record, c = item
        try:
            image = check_raw_image(image_loader(record))
            if c > 0:
                rng = CounterRng(derive_seed(seed, record.image_id, c))
                image = augment(image, augment_params, rng)
            return record.image_id, c, extract(handle, image, record.image_id, c)
        except LusScoreError as exc:
            raise exc.__class__(f"image {record.image_id!r}: {exc}") from exc

    if jobs <= 1 or len(todo) <= 1:
        results = [compute(item) for item in todo]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(compute, todo))
    for image_id, c, vector in results:
        cache.put(image_id, c, vector.values)
    return cache


def features_for_records(
    cache: FeatureCache, records: Iterable[ImageRecord], copy_index: int = 0
) -> np.ndarray:
    """(n, d) float32 matrix for records, in record order, one copy index."""
    try:
        return cache.matrix([r.image_id for r in records], copy_index)
    except KeyError as exc:
        raise DataError(f"feature cache is missing {exc.args[0]!r}") from exc
