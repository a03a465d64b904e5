"""Image quality scoring: PSNR, SSIM, and the luminance-plane convention.

Both metrics operate on 8-bit-quantised values (``round(x * 255)``), the
scale restoration tables are reported on.  Quantisation rounds but does not
clip, so out-of-range float inputs keep their true error energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricResult:
    psnr_db: float  # may be math.inf when the images are identical
    ssim: float


def _q8(x: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(x, dtype=np.float64) * 255.0)


def psnr(a: np.ndarray, b: np.ndarray, max_val: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images match."""
    if a.shape != b.shape:
        raise ConfigurationError(f"psnr: shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((_q8(a) - _q8(b)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def _as_plane(x: np.ndarray, name: str) -> np.ndarray:
    if x.ndim == 2:
        return np.asarray(x, dtype=np.float64)
    if x.ndim == 4 and x.shape[0] == 1 and x.shape[1] == 1:
        return np.asarray(x[0, 0], dtype=np.float64)
    raise ConfigurationError(f"{name} must be a grayscale plane, got shape {x.shape}")


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Uses the constants of the original index (K1 = 0.01, K2 = 0.03,
    L = 255, window sigma 1.5) on grayscale planes.
    """
    pa, pb = _as_plane(a, "ssim: first image"), _as_plane(b, "ssim: second image")
    if pa.shape != pb.shape:
        raise ConfigurationError(f"ssim: shape mismatch {pa.shape} vs {pb.shape}")
    if min(pa.shape) < SSIM_WINDOW:
        raise ConfigurationError(f"ssim: image {pa.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    x, y = _q8(pa), _q8(pb)
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)

    def filt(img):
        return np.tensordot(sliding_window_view(img, win.shape), win, axes=([2, 3], [0, 1]))

    mu_x, mu_y = filt(x), filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    c1 = (SSIM_K1 * 255.0) ** 2
    c2 = (SSIM_K2 * 255.0) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """Studio-range BT.601 luminance of an RGB tensor in [0, 1]."""
    if img.ndim != 4 or img.shape[1] != 3:
        raise ConfigurationError(f"rgb_to_y needs (n, 3, h, w), got {img.shape}")
    r, g, b = img[:, 0], img[:, 1], img[:, 2]
    y = (16.0 + 65.481 * r + 128.553 * g + 24.966 * b) / 255.0
    return y[:, None, :, :].astype(img.dtype, copy=False)


def score_pair(restored: np.ndarray, reference: np.ndarray, y_channel: bool = False) -> MetricResult:
    """PSNR/SSIM for one image pair.

    With ``y_channel`` (or any colour pair for SSIM) scoring happens on the
    BT.601 luminance plane; PSNR otherwise runs over all channels.
    """
    if restored.shape != reference.shape:
        raise ConfigurationError(
            f"score_pair: shape mismatch {restored.shape} vs {reference.shape}"
        )
    if y_channel and restored.shape[1] == 3:
        restored, reference = rgb_to_y(restored), rgb_to_y(reference)
    p = psnr(restored, reference)
    if restored.shape[1] == 3:
        sa, sb = rgb_to_y(restored), rgb_to_y(reference)
    else:
        sa, sb = restored, reference
    return MetricResult(psnr_db=p, ssim=ssim(sa[:1], sb[:1]))
