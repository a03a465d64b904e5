"""Seeded generators of low-quality inputs.

Four degradation families, all pure functions of (input, spec):

* additive white Gaussian noise at a stated standard deviation on the 0-255
  intensity scale, left unclipped so the noise stays exactly Gaussian;
* Bayer mosaicing that keeps one colour sample per pixel;
* JPEG-style compression: 8x8 block DCT, quantisation by the standard
  luminance table scaled by the usual quality factor, dequantisation and
  inverse DCT (entropy coding is lossless and therefore omitted);
* bicubic resampling with an anti-aliasing kernel on downscale.

Images are float arrays in [0, 1] shaped (n, c, h, w).  Randomness comes
from Philox streams (see :mod:`rnan.rng`), so a given seed reproduces the
same bytes on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .rng import stream
from .tensor import Tensor4

BAYER_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")


@dataclass(frozen=True)
class DegradationSpec:
    """Task descriptor selecting one degradation and its parameters."""

    kind: str  # awgn | mosaic | jpeg | bicubic_sr
    sigma: float = 0.0  # noise std on the 0-255 scale
    pattern: str = "RGGB"
    quality: int = 50
    scale: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("awgn", "mosaic", "jpeg", "bicubic_sr"):
            raise ConfigurationError(f"unknown degradation kind {self.kind!r}")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be >= 0")
        if not 1 <= self.quality <= 100:
            raise ConfigurationError("quality must lie in [1, 100]")
        if self.scale not in (2, 3, 4):
            raise ConfigurationError("scale must be one of 2, 3, 4")
        if self.pattern not in BAYER_PATTERNS:
            raise ConfigurationError(f"pattern must be one of {BAYER_PATTERNS}")


def add_awgn(img: Tensor4, sigma: float, seed) -> Tensor4:
    """Add i.i.d. Gaussian noise of std ``sigma``/255; output is not clipped."""
    if sigma < 0:
        raise ConfigurationError("sigma must be >= 0")
    if sigma == 0:
        return img.copy()
    rng = stream(*seed) if isinstance(seed, tuple) else stream(seed)
    noise = rng.standard_normal(img.shape) * (sigma / 255.0)
    return img + noise.astype(img.dtype, copy=False)


def mosaic_bayer(img: Tensor4, pattern: str = "RGGB") -> Tensor4:
    """Keep the one colour sample per pixel dictated by the Bayer layout."""
    if img.ndim != 4 or img.shape[1] != 3:
        raise ConfigurationError(f"mosaic needs a 3-channel image, got shape {img.shape}")
    if pattern not in BAYER_PATTERNS:
        raise ConfigurationError(f"pattern must be one of {BAYER_PATTERNS}")
    # channel index for each cell of the 2x2 tile, row-major
    tile = {"R": 0, "G": 1, "B": 2}
    cells = [tile[ch] for ch in pattern]
    n, _, h, w = img.shape
    rows = np.arange(h)[:, None] % 2
    cols = np.arange(w)[None, :] % 2
    chan = np.array(cells).reshape(2, 2)[rows, cols]  # (h, w) channel kept
    mask = chan[None, :, :] == np.arange(3)[:, None, None]  # (3, h, w)
    return img * mask[None, :, :, :]


# --- JPEG surrogate --------------------------------------------------------

# Luminance quantisation table from the JPEG standard, Annex K.
_LUMA_QUANT = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def quant_table(quality: int) -> np.ndarray:
    """Annex-K luminance table scaled by the standard quality factor."""
    if not 1 <= quality <= 100:
        raise ConfigurationError("quality must lie in [1, 100]")
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    t = np.floor((_LUMA_QUANT * scale + 50.0) / 100.0)
    return np.clip(t, 1.0, 255.0)


def _dct_matrix() -> np.ndarray:
    k = np.arange(8)[:, None]
    n = np.arange(8)[None, :]
    d = np.cos((2 * n + 1) * k * np.pi / 16.0)
    d[0] *= math.sqrt(1.0 / 2.0)
    return d * 0.5  # orthonormal: rows scaled by sqrt(2/8), DC by sqrt(1/8)


_DCT = _dct_matrix()


def jpeg_degrade(img: Tensor4, quality: int) -> Tensor4:
    """Compress-and-decompress a luminance plane through the 8x8 DCT core.

    Values are level-shifted by 128 (on the 0-255 scale) before the
    transform, mirroring the standard; edge blocks are completed by
    replicating the last row/column.  Output is clamped to [0, 1].
    """
    if img.ndim != 4 or img.shape[1] != 1:
        raise ConfigurationError(f"jpeg_degrade needs a single-channel image, got {img.shape}")
    t = quant_table(quality)
    n, _, h, w = img.shape
    ph, pw = (-h) % 8, (-w) % 8
    x = np.asarray(img, dtype=np.float64) * 255.0 - 128.0
    x = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="edge")
    hb, wb = x.shape[2] // 8, x.shape[3] // 8
    blocks = x.reshape(n, hb, 8, wb, 8).transpose(0, 1, 3, 2, 4).reshape(-1, 8, 8)
    coeffs = _DCT @ blocks @ _DCT.T
    coeffs = np.round(coeffs / t) * t
    rec = _DCT.T @ coeffs @ _DCT
    rec = rec.reshape(n, hb, wb, 8, 8).transpose(0, 1, 3, 2, 4).reshape(n, 1, hb * 8, wb * 8)
    rec = rec[:, :, :h, :w]
    out = np.clip((rec + 128.0) / 255.0, 0.0, 1.0)
    return out.astype(img.dtype, copy=False)


# --- bicubic resampling -----------------------------------------------------


def _cubic(t: np.ndarray) -> np.ndarray:
    """Keys cubic kernel with a = -0.5."""
    at = np.abs(t)
    at2, at3 = at * at, at * at * at
    near = 1.5 * at3 - 2.5 * at2 + 1.0
    far = -0.5 * at3 + 2.5 * at2 - 4.0 * at + 2.0
    return np.where(at <= 1.0, near, np.where(at < 2.0, far, 0.0))


def _resize_weights(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) row-normalised bicubic weights, edge-replicated.

    On downscale the kernel is stretched by the inverse scale so it acts as
    an anti-aliasing filter, the convention of the usual bicubic baselines.
    """
    r = n_out / n_in
    stretch = max(1.0, 1.0 / r)
    width = 2.0 * stretch
    mat = np.zeros((n_out, n_in))
    for u in range(n_out):
        center = (u + 0.5) / r - 0.5
        lo = int(math.floor(center - width)) + 1
        hi = int(math.ceil(center + width)) - 1
        idx = np.arange(lo, hi + 1)
        wts = _cubic((center - idx) / stretch)
        s = wts.sum()
        if s == 0:
            continue
        wts = wts / s
        np.add.at(mat[u], np.clip(idx, 0, n_in - 1), wts)
    return mat


def bicubic_resize(img: Tensor4, scale_num: int, scale_den: int) -> Tensor4:
    """Separable bicubic resampling by the rational factor num/den."""
    if scale_num < 1 or scale_den < 1:
        raise ConfigurationError("scale must be positive")
    if img.ndim != 4:
        raise ConfigurationError(f"bicubic_resize needs (n, c, h, w), got {img.shape}")
    if scale_num == scale_den:
        return img.copy()
    n, c, h, w = img.shape
    oh = max(1, (h * scale_num) // scale_den)
    ow = max(1, (w * scale_num) // scale_den)
    wh = _resize_weights(h, oh).astype(np.float64)
    ww = _resize_weights(w, ow).astype(np.float64)
    out = np.einsum("oi,ncij->ncoj", wh, np.asarray(img, dtype=np.float64))
    out = np.einsum("pj,ncoj->ncop", ww, out)
    return out.astype(img.dtype, copy=False)


# --- task-level pairing -----------------------------------------------------


def degrade_pair(img: Tensor4, spec: DegradationSpec, seed=None):
    """Produce the (low-quality, high-quality) pair a restorer trains against.

    JPEG restoration happens on the luminance plane, so a colour input is
    converted first and the returned high-quality target is that plane.
    Super-resolution crops to a multiple of the scale, then the low-quality
    image is the bicubic down-and-up round trip at the original size.
    """
    from .metrics import rgb_to_y

    if seed is None:
        seed = spec.seed
    if spec.kind == "awgn":
        return add_awgn(img, spec.sigma, seed), img
    if spec.kind == "mosaic":
        return mosaic_bayer(img, spec.pattern), img
    if spec.kind == "jpeg":
        plane = rgb_to_y(img) if img.shape[1] == 3 else img
        return jpeg_degrade(plane, spec.quality), plane
    # bicubic_sr
    s = spec.scale
    h, w = img.shape[2] - img.shape[2] % s, img.shape[3] - img.shape[3] % s
    if h < s or w < s:
        raise ConfigurationError(f"image {img.shape} too small for scale {s}")
    hq = img[:, :, :h, :w]
    low = bicubic_resize(hq, 1, s)
    return bicubic_resize(low, s, 1), hq
