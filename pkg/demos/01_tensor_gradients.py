"""Tensor primitives and gradient checking.

Every layer in the network is built from a handful of 4-D tensor ops, each
with a hand-derived backward pass.  This script walks through the forward
behaviour and then lets the finite-difference checker confront every
analytic gradient with a numerical one.
"""

import numpy as np

from rnan import ConvSpec, conv2d, conv2d_transpose, default_suite, sigmoid, softmax_rows

# A 3x3 box filter over a small ramp: same-padding keeps the spatial size.
x = np.arange(1, 10, dtype=float).reshape(1, 1, 3, 3)
w = np.ones((1, 1, 3, 3))
spec = ConvSpec(kernel=(3, 3), stride=1, pad=1, in_channels=1, out_channels=1)
print("input:\n", x[0, 0])
print("box-filtered:\n", conv2d(x, w, np.zeros(1), spec)[0, 0])

# The transposed convolution undoes a stride-2 downscale geometrically.
# Asking for the original 5x5 size back resolves the ambiguity that stride-2
# introduces (both 4x4 and 5x5 downscale to the same size).
down_spec = ConvSpec(kernel=(3, 3), stride=2, pad=1, in_channels=1, out_channels=1)
small = np.ones((1, 1, 3, 3))
up = conv2d_transpose(small, w, np.zeros(1), down_spec, target_hw=(5, 5))
print("\nscatter of an all-ones 3x3 input back to 5x5 (overlap counts):\n", up[0, 0])

# Adjointness: <conv(x), y> == <x, conv_transpose(y)> makes the pair usable
# as exact forward/backward partners.
rng = np.random.default_rng(7)
xa = rng.standard_normal((1, 1, 5, 5))
ya = rng.standard_normal((1, 1, 3, 3))
lhs = np.sum(conv2d(xa, w, np.zeros(1), down_spec) * ya)
rhs = np.sum(xa * conv2d_transpose(ya, w, np.zeros(1), down_spec, (5, 5)))
print(f"\nadjointness gap: {abs(lhs - rhs):.2e}")

print("\nsigmoid(0) =", sigmoid(np.zeros(1))[0])
print("softmax of a constant row:", softmax_rows(np.zeros((1, 4)))[0])

# The full gradient suite: every op plus a one-block network end to end.
print("\nfinite-difference gradient suite (5 seeds):")
for report in default_suite():
    status = "ok " if report.max_rel_error < 1e-4 else "BAD"
    print(f"  {status} {report.op_name:26s} max rel error {report.max_rel_error:.2e}")
