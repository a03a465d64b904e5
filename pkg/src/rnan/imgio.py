"""Image file I/O.

PNG (via Pillow) is the interchange format; binary PGM/PPM (maxval 255) is
kept as a dependency-free, bit-exact fallback.  In memory images are float
tensors in [0, 1]; conversion to 8 bits happens only here.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigurationError

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm")


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantise to 8 bits."""
    return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    """Lift (h, w) or (h, w, c) uint8 pixels to a float (1, c, h, w) tensor."""
    arr = np.asarray(raw, dtype=np.float32) / 255.0
    if arr.ndim == 2:
        return arr[None, None]
    return np.ascontiguousarray(arr.transpose(2, 0, 1))[None]


def _read_pnm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
        if len(fields) == 1 and fields[0] not in (b"P5", b"P6"):
            raise ConfigurationError(f"{path}: not a binary PGM/PPM file")
    pos += 1  # single whitespace after maxval
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ConfigurationError(f"{path}: only maxval 255 is supported")
    channels = 1 if magic == b"P5" else 3
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * channels, offset=pos)
    if pixels.size != w * h * channels:
        raise ConfigurationError(f"{path}: truncated pixel data")
    return pixels.reshape((h, w) if channels == 1 else (h, w, channels))


def _write_pnm(path: Path, raw: np.ndarray) -> None:
    if raw.ndim == 2:
        magic, shape = b"P5", raw.shape
    else:
        magic, shape = b"P6", raw.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, shape[1], shape[0])
    path.write_bytes(header + raw.tobytes())


def load_image(path) -> np.ndarray:
    """Read a PNG/PGM/PPM file as a float (1, c, h, w) tensor in [0, 1]."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm"):
        return from_uint8(_read_pnm(path))
    if suffix == ".png":
        from PIL import Image

        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB" if "A" in im.mode or "P" in im.mode else "L")
            return from_uint8(np.asarray(im))
    raise ConfigurationError(f"{path}: unsupported image format (use {IMAGE_SUFFIXES})")


def save_image(path, img: np.ndarray) -> None:
    """Write a float tensor as an 8-bit PNG/PGM/PPM file."""
    path = Path(path)
    if img.ndim != 4 or img.shape[0] != 1 or img.shape[1] not in (1, 3):
        raise ConfigurationError(f"save_image expects (1, 1|3, h, w), got {img.shape}")
    raw = to_uint8(img[0].transpose(1, 2, 0))
    if raw.shape[2] == 1:
        raw = raw[:, :, 0]
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm"):
        expected = ".pgm" if raw.ndim == 2 else ".ppm"
        if suffix != expected:
            raise ConfigurationError(f"{path}: channel count does not match {suffix}")
        _write_pnm(path, raw)
        return
    if suffix == ".png":
        from PIL import Image

        Image.fromarray(raw).save(path)
        return
    raise ConfigurationError(f"{path}: unsupported image format (use {IMAGE_SUFFIXES})")


def list_images(directory) -> list[Path]:
    """Sorted image paths directly inside ``directory``."""
    d = Path(directory)
    if not d.is_dir():
        raise ConfigurationError(f"{directory} is not a directory")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
