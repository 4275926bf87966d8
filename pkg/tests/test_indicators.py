import numpy as np
import pytest

from softmasklab.data import IndicatorKind, apply_mask, build_indicator


class TestBuildIndicator:
    def test_one_hot_channels(self):
        ind = build_indicator(3, IndicatorKind.one_hot(1), 4, 2)
        assert ind.tensor.shape == (3, 4, 2)
        assert np.all(ind.tensor[1] == 1.0)
        assert np.all(ind.tensor[0] == 0.0)
        assert np.all(ind.tensor[2] == 0.0)

    def test_uniform_values(self):
        ind = build_indicator(3, IndicatorKind.uniform(), 4, 2)
        assert np.allclose(ind.tensor, 1.0 / 3.0)

    def test_uniform_single_domain(self):
        ind = build_indicator(1, IndicatorKind.uniform(), 2, 2)
        assert np.all(ind.tensor == 1.0)

    def test_channel_sums(self):
        # one-hot(k) sums to H*W on channel k and zero elsewhere;
        # uniform sums to H*W/K per channel.
        h, w, k = 6, 3, 4
        one = build_indicator(k, IndicatorKind.one_hot(2), h, w)
        sums = one.tensor.sum(axis=(1, 2))
        assert sums[2] == h * w and sums.sum() == h * w
        uni = build_indicator(k, IndicatorKind.uniform(), h, w)
        assert np.allclose(uni.tensor.sum(axis=(1, 2)), h * w / k)

    def test_out_of_range_domain(self):
        with pytest.raises(ValueError):
            build_indicator(3, IndicatorKind.one_hot(3), 4, 4)

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            build_indicator(2, IndicatorKind.uniform(), 0, 4)

    def test_deterministic(self):
        a = build_indicator(4, IndicatorKind.one_hot(0), 5, 5)
        b = build_indicator(4, IndicatorKind.one_hot(0), 5, 5)
        assert np.array_equal(a.tensor, b.tensor)


class TestApplyMask:
    def test_identity_mask(self):
        image = np.ones((4, 4, 3))
        assert np.all(apply_mask(image, np.ones((4, 4))) == 1.0)

    def test_zero_mask(self):
        image = np.ones((4, 4, 3))
        assert np.all(apply_mask(image, np.zeros((4, 4))) == 0.0)

    def test_hand_product(self):
        image = np.array([[[0.5], [-0.5]]]).reshape(1, 1, 2)  # (C=1, H=1, W=2)
        mask = np.array([[1.0, 0.5]])
        out = apply_mask(image, mask)
        assert np.allclose(out, [[[0.5, -0.25]]])

    def test_channel_last(self):
        image = np.full((2, 2, 3), 0.8)
        mask = np.array([[1.0, 0.0], [0.5, 1.0]])
        out = apply_mask(image, mask)
        assert np.allclose(out[:, :, 0], image[:, :, 0] * mask)

    def test_idempotent_for_binary_masks(self, rng):
        image = rng.uniform(-1, 1, size=(8, 6, 3))
        mask = (rng.random((8, 6)) > 0.5).astype(np.float32)
        once = apply_mask(image, mask)
        twice = apply_mask(once, mask)
        assert np.array_equal(once, twice)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply_mask(np.ones((4, 4, 3)), np.ones((3, 4)))
