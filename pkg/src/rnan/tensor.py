"""Dense 4-D tensor primitives with analytic forward/backward passes.

Every operation here works on plain ``numpy.ndarray`` values of shape
``(n, c, h, w)`` (batch, channel, height, width), C-contiguous so that the
width index varies fastest.  For each differentiable op there is a
``*_fwd`` variant returning ``(output, cache)`` and a ``*_bwd`` variant
mapping an upstream gradient plus that cache back to input gradients.
All functions are pure: no hidden state, identical inputs give
bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# The universal signal/parameter carrier: a (n, c, h, w) float array.
Tensor4 = np.ndarray


def check_tensor4(x: np.ndarray, name: str = "tensor") -> None:
    """Validate the (n, c, h, w) layout and finiteness of values."""
    if x.ndim != 4:
        raise ConfigurationError(f"{name} must be 4-D (n, c, h, w), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of a 2-D convolution: kernel, stride, zero padding, channels."""

    kernel: tuple[int, int]
    stride: int
    pad: int
    in_channels: int
    out_channels: int

    def __post_init__(self):
        kh, kw = self.kernel
        if kh < 1 or kw < 1 or self.stride < 1 or self.pad < 0:
            raise ConfigurationError(f"invalid conv spec {self}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigurationError(f"invalid conv channels {self}")

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        kh, kw = self.kernel
        oh = (h + 2 * self.pad - kh) // self.stride + 1
        ow = (w + 2 * self.pad - kw) // self.stride + 1
        if oh < 1 or ow < 1:
            raise ConfigurationError(
                f"conv output size {oh}x{ow} is non-positive for input {h}x{w} with {self}"
            )
        return oh, ow


@dataclass
class GradCheckReport:
    """Outcome of one finite-difference comparison."""

    op_name: str
    max_rel_error: float
    worst_coordinate: tuple

    def ok(self, tol: float) -> bool:
        return self.max_rel_error < tol


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------


def _im2col(x: np.ndarray, kernel: tuple[int, int], stride: int, pad: int) -> np.ndarray:
    """Unfold padded input into a (c*kh*kw, n*oh*ow) matrix of receptive fields.

    Filled one kernel offset at a time so every copy runs over long
    contiguous rows instead of 3-element patch fragments.
    """
    kh, kw = kernel
    n, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    cols = np.empty((c, kh, kw, n, oh, ow), dtype=x.dtype)
    for a in range(kh):
        for b in range(kw):
            sl = x[:, :, a : a + (oh - 1) * stride + 1 : stride, b : b + (ow - 1) * stride + 1 : stride]
            cols[:, a, b] = sl.transpose(1, 0, 2, 3)
    return cols.reshape(c * kh * kw, n * oh * ow)


def _check_conv_args(x, w, b, spec, op):
    if x.ndim != 4 or w.ndim != 4:
        raise ConfigurationError(f"{op}: input and weight must be 4-D")
    kh, kw = spec.kernel
    if w.shape != (spec.out_channels, spec.in_channels, kh, kw):
        raise ConfigurationError(
            f"{op}: weight shape {w.shape} does not match spec "
            f"({spec.out_channels}, {spec.in_channels}, {kh}, {kw})"
        )


def conv2d_fwd(x: Tensor4, w: np.ndarray, b: np.ndarray, spec: ConvSpec):
    """Cross-correlation with zero padding; returns (output, cache)."""
    _check_conv_args(x, w, b, spec, "conv2d")
    if x.shape[1] != spec.in_channels:
        raise ConfigurationError(
            f"conv2d: input has {x.shape[1]} channels, spec expects {spec.in_channels}"
        )
    n, _, h, w_in = x.shape
    oh, ow = spec.out_hw(h, w_in)
    cols = _im2col(x, spec.kernel, spec.stride, spec.pad)
    wmat = w.reshape(spec.out_channels, -1)
    y = wmat @ cols  # (out_c, n*oh*ow)
    if b is not None:
        y += b[:, None]
    y = y.reshape(spec.out_channels, n, oh, ow).transpose(1, 0, 2, 3)
    return np.ascontiguousarray(y), (x, w, spec)


def conv2d(x: Tensor4, w: np.ndarray, b: np.ndarray, spec: ConvSpec) -> Tensor4:
    return conv2d_fwd(x, w, b, spec)[0]


def _dilate(y: np.ndarray, stride: int) -> np.ndarray:
    """Insert stride-1 zeros between spatial samples."""
    if stride == 1:
        return y
    n, c, h, w = y.shape
    out = np.zeros((n, c, (h - 1) * stride + 1, (w - 1) * stride + 1), dtype=y.dtype)
    out[:, :, ::stride, ::stride] = y
    return out


def _grad_wrt_input(gy: np.ndarray, w: np.ndarray, spec: ConvSpec, in_hw: tuple[int, int]):
    """Adjoint of conv2d with respect to its input (dilate, full-correlate, crop)."""
    kh, kw = spec.kernel
    h, w_in = in_hw
    gyd = _dilate(gy, spec.stride)
    # weights flipped spatially, in/out channel axes swapped
    wf = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    full = ConvSpec((kh, kw), 1, 0, spec.out_channels, spec.in_channels)
    gyd = np.pad(gyd, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
    gxp = conv2d_fwd(gyd, wf, None, full)[0]
    # rows/cols beyond the last window position receive zero gradient
    ph, pw = h + 2 * spec.pad, w_in + 2 * spec.pad
    if gxp.shape[2] < ph or gxp.shape[3] < pw:
        gxp = np.pad(
            gxp,
            ((0, 0), (0, 0), (0, ph - gxp.shape[2]), (0, pw - gxp.shape[3])),
        )
    p = spec.pad
    return np.ascontiguousarray(gxp[:, :, p : p + h, p : p + w_in])


def conv2d_bwd(gy: np.ndarray, cache):
    """Gradients of conv2d w.r.t. (input, weight, bias)."""
    x, w, spec = cache
    n = x.shape[0]
    oh, ow = gy.shape[2], gy.shape[3]
    gy_mat = np.ascontiguousarray(gy.transpose(1, 0, 2, 3)).reshape(-1, n * oh * ow)
    cols = _im2col(x, spec.kernel, spec.stride, spec.pad)
    gw = (gy_mat @ cols.T).reshape(w.shape)
    gb = gy_mat.sum(axis=1)
    gx = _grad_wrt_input(gy, w, spec, (x.shape[2], x.shape[3]))
    return gx, gw, gb


def conv2d_transpose_fwd(
    x: Tensor4, w: np.ndarray, b: np.ndarray, spec: ConvSpec, target_hw: tuple[int, int]
):
    """Transposed convolution restoring an explicit pre-downscale size.

    With zero bias this is the exact adjoint of ``conv2d`` on a
    ``target_hw``-sized input: positions the forward windows never touched
    come back as zeros.
    """
    _check_conv_args(x, w, b, spec, "conv2d_transpose")
    if x.shape[1] != spec.out_channels:
        raise ConfigurationError(
            f"conv2d_transpose: input has {x.shape[1]} channels, spec expects {spec.out_channels}"
        )
    th, tw = target_hw
    if spec.out_hw(th, tw) != (x.shape[2], x.shape[3]):
        raise ConfigurationError(
            f"conv2d_transpose: target {target_hw} does not downscale to input "
            f"size {x.shape[2:]} under {spec}"
        )
    y = _grad_wrt_input(x, w, spec, target_hw)
    if b is not None:
        y += b[None, :, None, None]
    return y, (x, w, spec, target_hw)


def conv2d_transpose(x, w, b, spec, target_hw) -> Tensor4:
    return conv2d_transpose_fwd(x, w, b, spec, target_hw)[0]


def conv2d_transpose_bwd(gy: np.ndarray, cache):
    """Gradients of conv2d_transpose w.r.t. (input, weight, bias)."""
    x, w, spec, target_hw = cache
    gx = conv2d_fwd(gy, w, None, spec)[0]
    n = x.shape[0]
    oh, ow = x.shape[2], x.shape[3]
    x_mat = np.ascontiguousarray(x.transpose(1, 0, 2, 3)).reshape(-1, n * oh * ow)
    cols = _im2col(gy, spec.kernel, spec.stride, spec.pad)
    gw = (x_mat @ cols.T).reshape(w.shape)
    gb = gy.sum(axis=(0, 2, 3))
    return gx, gw, gb


# ---------------------------------------------------------------------------
# elementwise ops
# ---------------------------------------------------------------------------


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_bwd(gy: np.ndarray, x: np.ndarray) -> np.ndarray:
    # subgradient at 0 taken as 0
    return gy * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function; outputs lie strictly in (0, 1)."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_bwd(gy: np.ndarray, y: np.ndarray) -> np.ndarray:
    return gy * y * (1.0 - y)


def _check_same_dims(x, y, op):
    if x.shape != y.shape:
        raise ConfigurationError(f"{op}: shape mismatch {x.shape} vs {y.shape}")


def add(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _check_same_dims(x, y, "add")
    return x + y


def mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _check_same_dims(x, y, "mul")
    return x * y


# add_bwd: (gy, gy).  mul_bwd:
def mul_bwd(gy: np.ndarray, x: np.ndarray, y: np.ndarray):
    return gy * y, gy * x


# ---------------------------------------------------------------------------
# matrix helpers
# ---------------------------------------------------------------------------


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ConfigurationError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return a @ b


def matmul_bwd(gy: np.ndarray, a: np.ndarray, b: np.ndarray):
    return gy @ b.T, a.T @ gy


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    if m.ndim != 2:
        raise ConfigurationError(f"softmax_rows: expected a matrix, got shape {m.shape}")
    z = m - m.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_bwd(gy: np.ndarray, y: np.ndarray) -> np.ndarray:
    return y * (gy - (gy * y).sum(axis=1, keepdims=True))


def tensor_to_matrix(x: Tensor4) -> np.ndarray:
    """Flatten one-sample feature maps (1, c, h, w) to a (c, h*w) matrix."""
    if x.ndim != 4 or x.shape[0] != 1:
        raise ConfigurationError(f"tensor_to_matrix expects (1, c, h, w), got {x.shape}")
    return x.reshape(x.shape[1], -1)


def matrix_to_tensor(m: np.ndarray, hw: tuple[int, int]) -> Tensor4:
    h, w = hw
    if m.ndim != 2 or m.shape[1] != h * w:
        raise ConfigurationError(f"matrix_to_tensor: {m.shape} does not hold {h}x{w} maps")
    return m.reshape(1, m.shape[0], h, w)
