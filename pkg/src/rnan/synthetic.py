"""Procedural image corpora for desk-scale experiments.

Real restoration corpora are large photo collections; at desk scale we
synthesise small stand-ins with comparable ingredients: smooth shaded
regions, sharp geometry, oriented texture.  Everything is seeded, so
corpora are reproducible.
"""

from __future__ import annotations

import numpy as np

from .degrade import bicubic_resize
from .rng import stream


def _smooth_field(rng, size: int, grid: int) -> np.ndarray:
    """Low-frequency field: a coarse random grid upsampled bicubically."""
    coarse = rng.standard_normal((1, 1, grid, grid))
    rep = (size + grid - 1) // grid
    field = bicubic_resize(coarse, rep, 1)[0, 0, :size, :size]
    return field


def make_image(seed: int, size: int = 64, channels: int = 3) -> np.ndarray:
    """One synthetic (1, c, size, size) image with values well inside [0, 1]."""
    rng = stream(seed, 0x51AE)
    img = np.zeros((channels, size, size))
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    for c in range(channels):
        base = 0.45 * _smooth_field(rng, size, 4) + 0.25 * _smooth_field(rng, size, 8)
        angle = rng.uniform(0, np.pi)
        ramp = (np.cos(angle) * xx + np.sin(angle) * yy) * rng.uniform(-0.4, 0.4)
        texture = 0.05 * _smooth_field(rng, size, 16)
        img[c] = base + ramp + texture
    # a few flat geometric patches for sharp edges
    for _ in range(rng.integers(2, 5)):
        h = int(rng.integers(size // 8, size // 2))
        w = int(rng.integers(size // 8, size // 2))
        top = int(rng.integers(0, size - h))
        left = int(rng.integers(0, size - w))
        shade = rng.uniform(-0.35, 0.35, size=channels)
        img[:, top : top + h, left : left + w] = (
            0.6 * img[:, top : top + h, left : left + w] + shade[:, None, None]
        )
    lo, hi = img.min(), img.max()
    img = 0.08 + 0.84 * (img - lo) / max(hi - lo, 1e-9)
    return img[None].astype(np.float32)


def make_corpus(count: int, seed: int = 0, size: int = 64, channels: int = 3) -> list[np.ndarray]:
    """A list of ``count`` reproducible images."""
    return [make_image(seed * 1000 + i, size=size, channels=channels) for i in range(count)]
