"""Tensor primitive tests against brute-force oracles."""

import numpy as np
import pytest

from rnan.errors import ConfigurationError
from rnan.tensor import (
    ConvSpec,
    add,
    check_tensor4,
    conv2d,
    conv2d_transpose,
    matmul,
    matrix_to_tensor,
    mul,
    relu,
    sigmoid,
    softmax_rows,
    tensor_to_matrix,
)

from conftest import seeded


def conv2d_reference(x, w, b, stride, pad):
    """Sliding-window loop over every output position."""
    n, c, h, wid = x.shape
    oc, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wid + 2 * pad - kw) // stride + 1
    out = np.zeros((n, oc, oh, ow))
    for ni in range(n):
        for o in range(oc):
            for i in range(oh):
                for j in range(ow):
                    patch = xp[ni, :, i * stride : i * stride + kh, j * stride : j * stride + kw]
                    out[ni, o, i, j] = np.sum(patch * w[o]) + b[o]
    return out


def conv2d_transpose_reference(y, w, b, stride, pad, target_hw):
    """Scatter-add of the kernel from every input position."""
    n, oc, ih, iw = y.shape
    _, ic, kh, kw = w.shape
    th, tw = target_hw
    out = np.zeros((n, ic, th + 2 * pad, tw + 2 * pad))
    for ni in range(n):
        for o in range(oc):
            for i in range(ih):
                for j in range(iw):
                    out[ni, :, i * stride : i * stride + kh, j * stride : j * stride + kw] += (
                        y[ni, o, i, j] * w[o]
                    )
    out = out[:, :, pad : pad + th, pad : pad + tw]
    return out + b[None, :, None, None]


class TestConv2d:
    def test_worked_example(self):
        x = np.arange(1, 10, dtype=float).reshape(1, 1, 3, 3)
        w = np.ones((1, 1, 3, 3))
        y = conv2d(x, w, np.zeros(1), ConvSpec((3, 3), 1, 1, 1, 1))
        expected = [[12, 21, 16], [27, 45, 33], [24, 39, 28]]
        assert np.array_equal(y[0, 0], expected)

    def test_identity_kernel(self, rng):
        x = rng.standard_normal((2, 3, 6, 7))
        w = np.zeros((3, 3, 3, 3))
        for c in range(3):
            w[c, c, 1, 1] = 1.0
        y = conv2d(x, w, np.zeros(3), ConvSpec((3, 3), 1, 1, 3, 3))
        assert np.array_equal(y, x)

    def test_stride2_shape(self):
        x = np.zeros((1, 1, 4, 4))
        y = conv2d(x, np.zeros((1, 1, 3, 3)), np.zeros(1), ConvSpec((3, 3), 2, 1, 1, 1))
        assert y.shape == (1, 1, 2, 2)

    @pytest.mark.parametrize("stride,pad,hw", [(1, 1, (5, 5)), (2, 1, (7, 6)), (1, 0, (4, 8)), (3, 2, (9, 9))])
    def test_against_reference(self, stride, pad, hw):
        rng = seeded(31, stride, pad, *hw)
        x = rng.standard_normal((2, 3, *hw))
        w = rng.standard_normal((4, 3, 3, 3))
        b = rng.standard_normal(4)
        got = conv2d(x, w, b, ConvSpec((3, 3), stride, pad, 3, 4))
        ref = conv2d_reference(x, w, b, stride, pad)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_channel_mismatch_rejected(self):
        x = np.zeros((1, 2, 4, 4))
        with pytest.raises(ConfigurationError):
            conv2d(x, np.zeros((1, 3, 3, 3)), np.zeros(1), ConvSpec((3, 3), 1, 1, 3, 1))

    def test_vanishing_output_rejected(self):
        x = np.zeros((1, 1, 2, 2))
        with pytest.raises(ConfigurationError):
            conv2d(x, np.zeros((1, 1, 3, 3)), np.zeros(1), ConvSpec((3, 3), 1, 0, 1, 1))

    def test_deterministic(self, rng):
        x = rng.standard_normal((1, 2, 5, 5))
        w = rng.standard_normal((2, 2, 3, 3))
        b = rng.standard_normal(2)
        spec = ConvSpec((3, 3), 1, 1, 2, 2)
        assert np.array_equal(conv2d(x, w, b, spec), conv2d(x, w, b, spec))


class TestConvTranspose:
    def test_target_shape(self):
        y = np.zeros((1, 1, 2, 2))
        out = conv2d_transpose(y, np.zeros((1, 1, 3, 3)), np.zeros(1), ConvSpec((3, 3), 2, 1, 1, 1), (4, 4))
        assert out.shape == (1, 1, 4, 4)

    def test_overlap_counts(self):
        y = np.ones((1, 1, 2, 2))
        w = np.ones((1, 1, 3, 3))
        spec = ConvSpec((3, 3), 2, 1, 1, 1)
        got = conv2d_transpose(y, w, np.zeros(1), spec, (4, 4))
        ref = conv2d_transpose_reference(y, w, np.zeros(1), 2, 1, (4, 4))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    @pytest.mark.parametrize("stride,pad,target", [(2, 1, (7, 9)), (2, 1, (8, 8)), (3, 0, (9, 12))])
    def test_against_scatter_reference(self, stride, pad, target):
        spec = ConvSpec((3, 3), stride, pad, 2, 3)
        ih, iw = spec.out_hw(*target)
        rng = seeded(47, stride, pad, *target)
        y = rng.standard_normal((2, 3, ih, iw))
        w = rng.standard_normal((3, 2, 3, 3))
        b = rng.standard_normal(2)
        got = conv2d_transpose(y, w, b, spec, target)
        ref = conv2d_transpose_reference(y, w, b, stride, pad, target)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    @pytest.mark.parametrize("target", [(5, 5), (6, 7), (7, 6), (9, 9)])
    def test_adjoint_of_conv2d(self, target):
        spec = ConvSpec((3, 3), 2, 1, 2, 3)
        oh, ow = spec.out_hw(*target)
        rng = seeded(53, *target)
        x = rng.standard_normal((1, 2, *target))
        y = rng.standard_normal((1, 3, oh, ow))
        w = rng.standard_normal((3, 2, 3, 3))
        lhs = np.sum(conv2d(x, w, np.zeros(3), spec) * y)
        rhs = np.sum(x * conv2d_transpose(y, w, np.zeros(2), spec, target))
        assert abs(lhs - rhs) < 1e-10

    def test_bad_target_rejected(self):
        y = np.zeros((1, 1, 2, 2))
        with pytest.raises(ConfigurationError):
            conv2d_transpose(y, np.zeros((1, 1, 3, 3)), np.zeros(1), ConvSpec((3, 3), 2, 1, 1, 1), (9, 9))


class TestElementwise:
    def test_sigmoid_midpoint(self):
        assert sigmoid(np.zeros(1))[0] == 0.5

    def test_sigmoid_symmetry(self, rng):
        x = rng.standard_normal(100) * 5
        np.testing.assert_allclose(sigmoid(x) + sigmoid(-x), 1.0, atol=1e-12)

    def test_sigmoid_open_interval(self, rng):
        y = sigmoid(rng.standard_normal((2, 3, 4, 4)) * 8)
        assert np.all(y > 0) and np.all(y < 1)

    def test_relu_definition(self):
        assert np.array_equal(relu(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])

    def test_relu_idempotent(self, rng):
        x = rng.standard_normal((3, 2, 4, 5))
        assert np.array_equal(relu(relu(x)), relu(x))

    def test_add_mul_shape_checks(self):
        with pytest.raises(ConfigurationError):
            add(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 3)))
        with pytest.raises(ConfigurationError):
            mul(np.zeros((1, 1, 2, 2)), np.zeros((1, 2, 2, 2)))

    def test_add_mul_elementwise(self, rng):
        x = rng.standard_normal((1, 2, 3, 3))
        y = rng.standard_normal((1, 2, 3, 3))
        assert np.array_equal(add(x, y), x + y)
        assert np.array_equal(mul(x, y), x * y)


class TestSoftmaxRows:
    def test_uniform_rows(self):
        m = np.full((3, 5), 2.7)
        np.testing.assert_allclose(softmax_rows(m), 1 / 5, atol=1e-15)

    def test_single_column(self):
        m = np.array([[3.0], [-1.0], [100.0]])
        assert np.array_equal(softmax_rows(m), np.ones((3, 1)))

    def test_shift_invariance(self, rng):
        m = rng.standard_normal((4, 6))
        np.testing.assert_allclose(softmax_rows(m + 13.7), softmax_rows(m), atol=1e-12)

    def test_rows_sum_to_one(self, rng):
        y = softmax_rows(rng.standard_normal((8, 9)) * 30)
        np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(y > 0) and np.all(y <= 1)

    def test_overflow_safety(self):
        y = softmax_rows(np.array([[1e4, 1e4 + 1.0]]))
        assert np.all(np.isfinite(y))


class TestReshapeHelpers:
    def test_round_trip(self, rng):
        x = rng.standard_normal((1, 3, 4, 5))
        m = tensor_to_matrix(x)
        assert m.shape == (3, 20)
        assert np.array_equal(matrix_to_tensor(m, (4, 5)), x)

    def test_matrix_column_is_one_position(self, rng):
        x = rng.standard_normal((1, 3, 4, 5))
        m = tensor_to_matrix(x)
        assert np.array_equal(m[:, 7], x[0, :, 1, 2])  # position (1, 2), row-major

    def test_shape_validation(self):
        with pytest.raises(ConfigurationError):
            tensor_to_matrix(np.zeros((2, 3, 4, 5)))
        with pytest.raises(ConfigurationError):
            matrix_to_tensor(np.zeros((3, 21)), (4, 5))


class TestFiniteness:
    def test_public_ops_keep_values_finite(self, rng):
        x = rng.standard_normal((2, 3, 6, 6)) * 50
        w = rng.standard_normal((4, 3, 3, 3))
        spec = ConvSpec((3, 3), 1, 1, 3, 4)
        checks = [
            conv2d(x, w, rng.standard_normal(4), spec),
            relu(x),
            sigmoid(x * 100),
            add(x, x),
            mul(x, x),
        ]
        for out in checks:
            check_tensor4(out)
        assert np.all(np.isfinite(softmax_rows(rng.standard_normal((4, 9)) * 1000)))

    def test_check_rejects_nan(self):
        bad = np.zeros((1, 1, 2, 2))
        bad[0, 0, 0, 0] = np.nan
        with pytest.raises(ConfigurationError):
            check_tensor4(bad)


class TestMatmul:
    def test_identity(self, rng):
        a = rng.standard_normal((4, 4))
        assert np.array_equal(matmul(a, np.eye(4)), a)

    def test_worked_example(self):
        got = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[5.0], [6.0]]))
        assert np.array_equal(got, [[17.0], [39.0]])

    def test_transpose_identity(self, rng):
        a = rng.standard_normal((3, 5))
        b = rng.standard_normal((5, 2))
        np.testing.assert_allclose(matmul(a, b).T, matmul(b.T.copy(), a.T.copy()), atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))
