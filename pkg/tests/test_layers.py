import numpy as np
import pytest

from imet.errors import ConfigError, ShapeError, StateError
from imet.nn import Conv2d, Dense, Dropout, Flatten, MaxPool2d


def rng():
    return np.random.default_rng(0)


class TestConv2d:
    def test_fig_shape_chain_5x5(self):
        layer = Conv2d(1, 1, 3, activation="linear", rng=rng())
        out = layer.forward(np.ones((1, 5, 5)))
        assert out.shape == (1, 3, 3)

    def test_scalar_kernel_scaling(self):
        layer = Conv2d(1, 1, 1, activation="linear", rng=rng())
        layer.weights = np.array([[[[2.0]]]])
        layer.bias = np.zeros(1)
        out = layer.forward(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
        np.testing.assert_allclose(out[0], [[2.0, 4.0], [6.0, 8.0]])

    def test_all_ones_window_sums(self):
        layer = Conv2d(1, 1, 2, activation="linear", rng=rng())
        layer.weights = np.ones((1, 1, 2, 2))
        layer.bias = np.zeros(1)
        out = layer.forward(np.ones((1, 3, 3)))
        assert out.shape == (1, 2, 2)
        assert out == pytest.approx(np.full((1, 2, 2), 4.0))

    def test_bias_added(self):
        layer = Conv2d(1, 1, 1, activation="linear", rng=rng())
        layer.weights = np.zeros((1, 1, 1, 1))
        layer.bias = np.array([0.25])
        out = layer.forward(np.ones((1, 2, 2)))
        assert out == pytest.approx(np.full((1, 2, 2), 0.25))

    def test_channel_mismatch_raises(self):
        layer = Conv2d(2, 4, 3, rng=rng())
        with pytest.raises(ShapeError):
            layer.forward(np.ones((3, 6, 6)))

    def test_kernel_too_large_raises(self):
        layer = Conv2d(1, 1, 3, rng=rng())
        with pytest.raises(ShapeError):
            layer.forward(np.ones((1, 2, 2)))

    def test_backward_before_forward_raises(self):
        layer = Conv2d(1, 1, 3, rng=rng())
        with pytest.raises(StateError):
            layer.backward(np.ones((1, 1, 1)))

    def test_batched_matches_per_sample(self):
        layer = Conv2d(2, 3, 3, activation="relu", rng=rng())
        x = np.random.default_rng(1).normal(size=(4, 2, 6, 6))
        batched = layer.forward(x)
        singles = np.stack([layer.forward(x[i]) for i in range(4)])
        np.testing.assert_allclose(batched, singles)


class TestMaxPool2d:
    def test_26_to_13(self):
        layer = MaxPool2d(2)
        out = layer.forward(np.zeros((32, 26, 26)))
        assert out.shape == (32, 13, 13)

    def test_odd_11_to_5(self):
        layer = MaxPool2d(2)
        out = layer.forward(np.zeros((32, 11, 11)))
        assert out.shape == (32, 5, 5)

    def test_single_window_max(self):
        out = MaxPool2d(2).forward(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
        np.testing.assert_allclose(out, [[[4.0]]])

    def test_trailing_row_column_dropped(self):
        x = np.zeros((1, 3, 3))
        x[0, 2, 2] = 99.0  # lives in the dropped trailing row/column
        x[0, 0, 0] = 1.0
        out = MaxPool2d(2).forward(x)
        np.testing.assert_allclose(out, [[[1.0]]])

    def test_too_small_raises(self):
        with pytest.raises(ShapeError):
            MaxPool2d(2).forward(np.zeros((1, 1, 5)))

    def test_backward_routes_to_argmax(self):
        layer = MaxPool2d(2)
        x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        layer.forward(x)
        dx = layer.backward(np.array([[[2.5]]]))
        np.testing.assert_allclose(dx, [[[0.0, 0.0], [0.0, 2.5]]])

    def test_backward_before_forward_raises(self):
        with pytest.raises(StateError):
            MaxPool2d(2).backward(np.ones((1, 1, 1)))


class TestDense:
    def test_identity_map(self):
        layer = Dense(3, 3, activation="linear", rng=rng())
        layer.weights = np.eye(3)
        layer.bias = np.zeros(3)
        x = np.array([1.5, -2.0, 0.25])
        assert layer.forward(x) == pytest.approx(x)

    def test_hand_dot_product(self):
        layer = Dense(2, 1, activation="linear", rng=rng())
        layer.weights = np.array([[1.0, 1.0]])
        layer.bias = np.array([0.5])
        assert layer.forward(np.array([2.0, 3.0])) == pytest.approx([5.5])

    def test_constant_map_on_zero_weights(self):
        layer = Dense(4, 2, activation="linear", rng=rng())
        layer.weights = np.zeros((2, 4))
        layer.bias = np.array([1.0, -1.0])
        for x in (np.zeros(4), np.ones(4), np.arange(4.0)):
            assert layer.forward(x) == pytest.approx([1.0, -1.0])

    def test_length_mismatch_raises(self):
        layer = Dense(4, 2, rng=rng())
        with pytest.raises(ShapeError):
            layer.forward(np.ones(5))


class TestDropout:
    def test_inference_identity(self):
        x = np.random.default_rng(2).normal(size=(7, 5))
        for rate in (0.0, 0.3, 0.9):
            out = Dropout(rate).forward(x, training=False)
            np.testing.assert_array_equal(out, x)

    def test_zero_rate_training_identity(self):
        x = np.random.default_rng(3).normal(size=(4, 4))
        out = Dropout(0.0).forward(x, training=True, rng=np.random.default_rng(0))
        np.testing.assert_array_equal(out, x)

    def test_inverted_scaling_preserves_mean(self):
        x = np.ones(10_000)
        out = Dropout(0.5).forward(x, training=True, rng=np.random.default_rng(4))
        assert 0.95 <= out.mean() <= 1.05
        survivors = out[out != 0.0]
        assert survivors == pytest.approx(np.full(survivors.size, 2.0))

    def test_rate_one_rejected(self):
        with pytest.raises(ConfigError):
            Dropout(1.0)

    def test_training_without_rng_rejected(self):
        with pytest.raises(ConfigError):
            Dropout(0.5).forward(np.ones(3), training=True)


class TestFlatten:
    def test_flatten_and_restore(self):
        layer = Flatten()
        x = np.arange(24.0).reshape(2, 3, 4)
        out = layer.forward(x)
        assert out.shape == (24,)
        dx = layer.backward(np.ones(24))
        assert dx.shape == (2, 3, 4)

    def test_batched(self):
        out = Flatten().forward(np.zeros((5, 2, 3, 4)))
        assert out.shape == (5, 24)


def test_forward_deterministic_given_same_mask_stream():
    layer = Dropout(0.5)
    x = np.random.default_rng(5).normal(size=(3, 8))
    a = layer.forward(x, training=True, rng=np.random.default_rng(42))
    b = layer.forward(x, training=True, rng=np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
