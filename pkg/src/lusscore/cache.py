"""Persistent feature cache.

Binary layout (all little-endian):

    magic "LUSF" | version u32 | backbone_id (u32 length + UTF-8)
    | fingerprint 32 bytes | feature_dim u32 | record count u64

followed by one record per vector:

    image_id (u32 length + UTF-8) | augmented_copy_index u32
    | feature_dim float32 values

Writes go to a temp file and are renamed into place, so readers never see
a partial cache.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import CacheFileError, DimensionMismatch

MAGIC = b"LUSF"
VERSION = 1
FINGERPRINT_LEN = 32


class FeatureCache:
    """In-memory feature store keyed by (image_id, augmented_copy_index)."""

    def __init__(self, backbone_id: str, fingerprint: bytes, feature_dim: int):
        if len(fingerprint) != FINGERPRINT_LEN:
            raise CacheFileError(f"fingerprint must be {FINGERPRINT_LEN} bytes")
        self.backbone_id = backbone_id
        self.fingerprint = bytes(fingerprint)
        self.feature_dim = int(feature_dim)
        self._store: dict[tuple[str, int], np.ndarray] = {}

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._store

    def __len__(self) -> int:
        return len(self._store)

    def get(self, image_id: str, copy_index: int = 0) -> np.ndarray:
        return self._store[(image_id, copy_index)]

    def put(self, image_id: str, copy_index: int, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float32).reshape(-1)
        if values.shape[0] != self.feature_dim:
            raise DimensionMismatch(
                f"{image_id}: expected {self.feature_dim} features, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise DimensionMismatch(f"{image_id}: non-finite feature values")
        self._store[(image_id, copy_index)] = values

    def items(self):
        return self._store.items()

    def matrix(self, image_ids, copy_index: int = 0) -> np.ndarray:
        """Stack vectors for the given ids (one copy index) into (n, d) float32."""
        rows = [self.get(image_id, copy_index) for image_id in image_ids]
        if not rows:
            return np.empty((0, self.feature_dim), dtype=np.float32)
        return np.stack(rows)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        blob = bytearray()
        blob += MAGIC
        blob += struct.pack("<I", VERSION)
        backbone = self.backbone_id.encode("utf-8")
        blob += struct.pack("<I", len(backbone)) + backbone
        blob += self.fingerprint
        blob += struct.pack("<I", self.feature_dim)
        keys = sorted(self._store)
        blob += struct.pack("<Q", len(keys))
        for image_id, copy_index in keys:
            encoded = image_id.encode("utf-8")
            blob += struct.pack("<I", len(encoded)) + encoded
            blob += struct.pack("<I", copy_index)
            blob += self._store[(image_id, copy_index)].astype("<f4").tobytes()
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(bytes(blob))
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "FeatureCache":
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise CacheFileError(f"cannot read cache {path}: {exc}") from exc
        try:
            pos = 0
            if data[:4] != MAGIC:
                raise CacheFileError(f"{path}: bad magic {data[:4]!r}")
            pos = 4
            (version,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if version != VERSION:
                raise CacheFileError(f"{path}: unsupported cache version {version}")
            (id_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            backbone_id = data[pos : pos + id_len].decode("utf-8")
            pos += id_len
            fingerprint = data[pos : pos + FINGERPRINT_LEN]
            pos += FINGERPRINT_LEN
            (feature_dim,) = struct.unpack_from("<I", data, pos)
            pos += 4
            (count,) = struct.unpack_from("<Q", data, pos)
            pos += 8
            cache = cls(backbone_id, fingerprint, feature_dim)
            vec_bytes = 4 * feature_dim
            for _ in range(count):
                (name_len,) = struct.unpack_from("<I", data, pos)
                pos += 4
                image_id = data[pos : pos + name_len].decode("utf-8")
                pos += name_len
                (copy_index,) = struct.unpack_from("<I", data, pos)
                pos += 4
                values = np.frombuffer(data, dtype="<f4", count=feature_dim, offset=pos)
                pos += vec_bytes
                cache._store[(image_id, copy_index)] = values.astype(np.float32)
            if pos != len(data):
                raise CacheFileError(f"{path}: {len(data) - pos} trailing bytes")
        except (struct.error, ValueError, IndexError, UnicodeDecodeError) as exc:
            raise CacheFileError(f"{path}: truncated or corrupt cache: {exc}") from exc
        return cache
