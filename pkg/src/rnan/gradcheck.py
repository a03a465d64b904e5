"""Finite-difference verification of analytic gradients.

An op under test is a callable ``f(*arrays) -> (y, vjp)`` where ``vjp(gy)``
returns one gradient array per input.  The check reduces ``y`` to a scalar
through a fixed random projection, compares the analytic gradient of that
scalar against central differences coordinate by coordinate, and reports the
worst relative error.  Everything runs in 64-bit.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .rng import stream
from .tensor import ConvSpec, GradCheckReport


def grad_check(
    op_name: str,
    f: Callable,
    inputs: Sequence[np.ndarray],
    eps: float | Sequence[float] = 1e-5,
    seed: int = 0,
    max_coords_per_input: int = 0,
) -> GradCheckReport:
    """Compare analytic and numeric gradients of ``f`` at ``inputs``.

    ``max_coords_per_input`` > 0 checks a seeded sample of coordinates per
    input instead of all of them, which keeps large parameter tensors
    affordable; 0 sweeps everything.

    ``eps`` may be a tuple of step sizes; each coordinate then scores the
    best agreement across the grid.  Central differences have a
    coordinate-dependent sweet spot (roundoff dominates below it, truncation
    above), and a correct gradient matches at some step while a wrong one
    matches at none.
    """
    inputs = [np.array(x, dtype=np.float64) for x in inputs]
    eps_grid = (eps,) if np.isscalar(eps) else tuple(eps)
    y, vjp = f(*inputs)
    y = np.asarray(y)
    rng = stream(seed, 0x6A0C)
    r = rng.standard_normal(y.shape)
    analytic = vjp(r)
    if len(analytic) != len(inputs):
        raise ValueError(f"{op_name}: vjp returned {len(analytic)} grads for {len(inputs)} inputs")

    def loss() -> float:
        return float(np.sum(np.asarray(f(*inputs)[0]) * r))

    worst = 0.0
    worst_coord: tuple = (0,)
    for k, x in enumerate(inputs):
        flat_ids = np.arange(x.size)
        if max_coords_per_input and x.size > max_coords_per_input:
            flat_ids = rng.choice(x.size, size=max_coords_per_input, replace=False)
        for flat in flat_ids:
            orig = x.flat[flat]
            ana = float(np.asarray(analytic[k]).flat[flat])
            rel = np.inf
            for step in eps_grid:
                x.flat[flat] = orig + step
                lp = loss()
                x.flat[flat] = orig - step
                lm = loss()
                x.flat[flat] = orig
                numeric = (lp - lm) / (2.0 * step)
                rel = min(rel, abs(ana - numeric) / max(abs(ana), abs(numeric), 1e-8))
            if rel > worst:
                worst = rel
                worst_coord = (k,) + np.unravel_index(int(flat), x.shape)
    return GradCheckReport(op_name, worst, worst_coord)


# ---------------------------------------------------------------------------
# wrappers turning the tensor ops into (y, vjp) callables
# ---------------------------------------------------------------------------


def conv2d_op(spec: ConvSpec):
    def f(x, w, b):
        y, cache = T.conv2d_fwd(x, w, b, spec)
        return y, lambda gy: T.conv2d_bwd(gy, cache)

    return f


def conv2d_transpose_op(spec: ConvSpec, target_hw):
    def f(x, w, b):
        y, cache = T.conv2d_transpose_fwd(x, w, b, spec, target_hw)
        return y, lambda gy: T.conv2d_transpose_bwd(gy, cache)

    return f


def relu_op(x):
    return T.relu(x), lambda gy: (T.relu_bwd(gy, x),)


def sigmoid_op(x):
    y = T.sigmoid(x)
    return y, lambda gy: (T.sigmoid_bwd(gy, y),)


def add_op(x, y):
    return T.add(x, y), lambda gy: (gy, gy)


def mul_op(x, y):
    return T.mul(x, y), lambda gy: T.mul_bwd(gy, x, y)


def matmul_op(a, b):
    return T.matmul(a, b), lambda gy: T.matmul_bwd(gy, a, b)


def softmax_rows_op(m):
    y = T.softmax_rows(m)
    return y, lambda gy: (T.softmax_rows_bwd(gy, y),)


def _away_from_kink(x: np.ndarray, margin: float = 1e-3) -> np.ndarray:
    """Nudge values off 0 so central differences never straddle the ReLU kink."""
    small = np.abs(x) < margin
    return x + small * np.where(x >= 0, margin, -margin)


def default_suite(seeds: Sequence[int] = (0, 1, 2, 3, 4)) -> list[GradCheckReport]:
    """Finite-difference checks for every differentiable op plus composites.

    Composites (residual block, attention pieces, a one-block network) are
    covered by the end-to-end check in :func:`end_to_end_check`, which this
    suite includes for each seed.
    """
    from .network import end_to_end_check

    reports = []
    for seed in seeds:
        rng = stream(seed, 0xC0FFEE)
        x = rng.standard_normal((2, 3, 6, 6))
        w = rng.standard_normal((4, 3, 3, 3)) * 0.5
        b = rng.standard_normal(4) * 0.1
        spec = ConvSpec((3, 3), 1, 1, 3, 4)
        reports.append(grad_check(f"conv2d[s{seed}]", conv2d_op(spec), [x, w, b], seed=seed))

        spec2 = ConvSpec((3, 3), 2, 1, 3, 4)
        reports.append(
            grad_check(f"conv2d_stride2[s{seed}]", conv2d_op(spec2), [x[:, :, :5, :5], w, b], seed=seed)
        )

        yt = rng.standard_normal((2, 4, 3, 3))
        reports.append(
            grad_check(
                f"conv2d_transpose[s{seed}]",
                conv2d_transpose_op(spec2, (5, 5)),
                [yt, w, rng.standard_normal(3) * 0.1],
                seed=seed,
            )
        )

        t = rng.standard_normal((2, 4, 8, 8))
        reports.append(grad_check(f"relu[s{seed}]", relu_op, [_away_from_kink(t)], seed=seed, eps=1e-6))
        reports.append(grad_check(f"sigmoid[s{seed}]", sigmoid_op, [t], seed=seed))
        u = rng.standard_normal(t.shape)
        reports.append(grad_check(f"add[s{seed}]", add_op, [t, u], seed=seed))
        reports.append(grad_check(f"mul[s{seed}]", mul_op, [t, u], seed=seed))

        a = rng.standard_normal((5, 4))
        bm = rng.standard_normal((4, 6))
        reports.append(grad_check(f"matmul[s{seed}]", matmul_op, [a, bm], seed=seed))
        reports.append(
            grad_check(f"softmax_rows[s{seed}]", softmax_rows_op, [rng.standard_normal((6, 7))], seed=seed)
        )

        reports.append(end_to_end_check(seed))
    return reports
