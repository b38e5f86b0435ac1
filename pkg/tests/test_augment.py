import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lusscore.augment import AugmentParams, apply_affine, augment, resize_bilinear
from lusscore.errors import ConfigError, DimensionMismatch
from lusscore.rng import CounterRng


def image(h=13, w=17, channels=None, seed=0):
    rng = np.random.default_rng(seed)
    shape = (h, w) if channels is None else (h, w, channels)
    return rng.integers(0, 256, shape, dtype=np.uint8)


class TestParams:
    def test_defaults_valid(self):
        AugmentParams()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"max_rotation_deg": -1},
            {"max_shift_frac": 1.0},
            {"max_scale_delta": -0.1},
            {"hflip_prob": 1.5},
        ],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ConfigError):
            AugmentParams(**kwargs)


class TestAugment:
    def test_all_zero_params_identity(self):
        img = image()
        out = augment(img, AugmentParams(0, 0, 0, 0), CounterRng(1))
        assert np.array_equal(out, img)

    def test_flip_prob_one_exact_mirror(self):
        img = image()
        out = augment(img, AugmentParams(0, 0, 0, 1.0), CounterRng(1))
        assert np.array_equal(out, img[:, ::-1])

    def test_double_flip_identity(self):
        img = image(channels=3)
        params = AugmentParams(0, 0, 0, 1.0)
        once = augment(img, params, CounterRng(5))
        twice = augment(once, params, CounterRng(5))
        assert np.array_equal(twice, img)

    def test_deterministic_given_seed(self):
        img = image()
        params = AugmentParams(15, 0.2, 0.15, 0.5)
        a = augment(img, params, CounterRng(77))
        b = augment(img, params, CounterRng(77))
        assert np.array_equal(a, b)
        c = augment(img, params, CounterRng(78))
        assert not np.array_equal(a, c)

    def test_shape_and_dtype_preserved(self):
        for shape_kwargs in ({}, {"channels": 1}, {"channels": 3}):
            img = image(**shape_kwargs)
            out = augment(img, AugmentParams(), CounterRng(3))
            assert out.shape == img.shape
            assert out.dtype == np.uint8

    @settings(max_examples=40, deadline=None)
    @given(
        h=st.integers(2, 40),
        w=st.integers(2, 40),
        rotation=st.floats(0, 45),
        shift=st.floats(0, 0.4),
        scale=st.floats(0, 0.4),
        seed=st.integers(0, 2**31),
    )
    def test_shape_preserved_property(self, h, w, rotation, shift, scale, seed):
        img = image(h, w, seed=seed % 100)
        params = AugmentParams(rotation, shift, scale, 0.5)
        out = augment(img, params, CounterRng(seed))
        assert out.shape == img.shape

    def test_large_shift_fills_black(self):
        img = np.full((10, 10), 200, dtype=np.uint8)
        out = apply_affine(img, 0.0, 0.9, 0.0, 1.0, False)
        # shifted by 9 px: the 9 left-most columns come from outside
        assert np.all(out[:, :9] == 0)
        assert np.all(out[:, 9] == 200)

    def test_rotation_keeps_mean_reasonable(self):
        img = np.full((21, 21), 100, dtype=np.uint8)
        out = apply_affine(img, 45.0, 0.0, 0.0, 1.0, False)
        assert out.shape == img.shape
        # corners leave the frame, centre stays
        assert out[10, 10] == 100
        assert out[0, 0] == 0

    def test_integer_shift_is_exact(self):
        img = image(12, 12)
        out = apply_affine(img, 0.0, 2 / 12, 0.0, 1.0, False)
        assert np.array_equal(out[:, 2:], img[:, :-2])

    def test_rejects_non_uint8(self):
        with pytest.raises(DimensionMismatch):
            augment(np.zeros((4, 4), dtype=np.float32), AugmentParams(), CounterRng(0))


class TestResize:
    def test_constant_image_stays_constant(self):
        img = np.full((9, 7), 63, dtype=np.uint8)
        out = resize_bilinear(img, 20, 30)
        assert out.shape == (20, 30, 1)
        assert np.allclose(out, 63.0)

    def test_identity_size(self):
        img = image(8, 8, channels=3)
        out = resize_bilinear(img, 8, 8)
        assert np.array_equal(out, img.astype(np.float32))

    def test_range_preserved(self):
        img = image(15, 11)
        out = resize_bilinear(img, 7, 23)
        assert out.min() >= img.min() - 1e-5
        assert out.max() <= img.max() + 1e-5
