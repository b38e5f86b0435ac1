import struct

import numpy as np
import pytest

from lusscore.cache import FeatureCache, MAGIC
from lusscore.errors import CacheFileError, DimensionMismatch

FP = bytes(range(32))


def filled_cache(dim=6, n=5):
    cache = FeatureCache("custom", FP, dim)
    rng = np.random.default_rng(0)
    for i in range(n):
        for copy in (0, 1):
            cache.put(f"img{i}", copy, rng.normal(size=dim).astype(np.float32))
    return cache


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        cache = filled_cache()
        path = tmp_path / "f.lusf"
        cache.save(path)
        loaded = FeatureCache.load(path)
        assert loaded.backbone_id == "custom"
        assert loaded.fingerprint == FP
        assert loaded.feature_dim == 6
        assert len(loaded) == len(cache)
        for key, values in cache.items():
            assert np.array_equal(loaded.get(*key), values)
            assert loaded.get(*key).dtype == np.float32

    def test_save_is_atomic(self, tmp_path):
        cache = filled_cache()
        path = tmp_path / "f.lusf"
        cache.save(path)
        cache.save(path)  # overwrite cleanly
        assert not path.with_suffix(".lusf.tmp").exists()
        FeatureCache.load(path)

    def test_header_layout(self, tmp_path):
        cache = FeatureCache("synthetic", FP, 3)
        cache.put("a", 0, np.asarray([1, 2, 3], dtype=np.float32))
        path = tmp_path / "f.lusf"
        cache.save(path)
        data = path.read_bytes()
        assert data[:4] == MAGIC
        (version,) = struct.unpack_from("<I", data, 4)
        assert version == 1
        (name_len,) = struct.unpack_from("<I", data, 8)
        assert data[12 : 12 + name_len] == b"synthetic"
        pos = 12 + name_len
        assert data[pos : pos + 32] == FP
        (dim,) = struct.unpack_from("<I", data, pos + 32)
        (count,) = struct.unpack_from("<Q", data, pos + 36)
        assert (dim, count) == (3, 1)


class TestErrors:
    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.lusf"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(CacheFileError):
            FeatureCache.load(path)

    def test_truncated(self, tmp_path):
        cache = filled_cache()
        path = tmp_path / "f.lusf"
        cache.save(path)
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(CacheFileError):
            FeatureCache.load(path)

    def test_trailing_garbage(self, tmp_path):
        cache = filled_cache()
        path = tmp_path / "f.lusf"
        cache.save(path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(CacheFileError):
            FeatureCache.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CacheFileError):
            FeatureCache.load(tmp_path / "absent.lusf")

    def test_put_wrong_dim(self):
        cache = FeatureCache("custom", FP, 4)
        with pytest.raises(DimensionMismatch):
            cache.put("a", 0, np.zeros(5, dtype=np.float32))

    def test_put_non_finite(self):
        cache = FeatureCache("custom", FP, 2)
        with pytest.raises(DimensionMismatch):
            cache.put("a", 0, np.asarray([1.0, np.nan], dtype=np.float32))

    def test_bad_fingerprint_length(self):
        with pytest.raises(CacheFileError):
            FeatureCache("custom", b"short", 4)


def test_matrix_orders_rows():
    cache = filled_cache(dim=3, n=4)
    matrix = cache.matrix(["img2", "img0"], copy_index=1)
    assert matrix.shape == (2, 3)
    assert np.array_equal(matrix[0], cache.get("img2", 1))
    assert np.array_equal(matrix[1], cache.get("img0", 1))
