"""Binary checkpoint format.

Layout (all integers little-endian):

* magic bytes ``RNAN``
* u32 format version (currently 1)
* u32 length + UTF-8 JSON of the network config
* u32 parameter count, then per parameter in canonical build order:
  u32 name length, name bytes, u32 ndim, ndim u32 dims, float32 data
* u8 moments flag; when 1: u64 Adam step counter, then per parameter two
  more records in the same layout named ``<name>.adam_m`` / ``<name>.adam_v``

Moments are written when saving mid-training so optimisation resumes
exactly; final checkpoints omit them.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .network import RNAN, BlockConfig, NetworkConfig, ParamStore, build_network

MAGIC = b"RNAN"
VERSION = 1


def config_to_json(cfg: NetworkConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), sort_keys=True)


def config_from_json(text: str) -> NetworkConfig:
    d = json.loads(text)
    block = BlockConfig(**d.pop("block"))
    pos = d.pop("nonlocal_positions")
    return NetworkConfig(
        block=block, nonlocal_positions=None if pos is None else tuple(pos), **d
    )


def _write_record(out, name: str, arr: np.ndarray) -> None:
    raw = name.encode("utf-8")
    out.write(struct.pack("<I", len(raw)))
    out.write(raw)
    out.write(struct.pack("<I", arr.ndim))
    out.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    out.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ConfigurationError("checkpoint truncated")
    return data


def _read_record(fh) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<I", _read_exact(fh, 4))
    name = _read_exact(fh, name_len).decode("utf-8")
    (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
    shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
    count = int(np.prod(shape)) if ndim else 1
    data = np.frombuffer(_read_exact(fh, 4 * count), dtype="<f4").reshape(shape)
    return name, data


def save_checkpoint(path, store: ParamStore, cfg: NetworkConfig, with_moments: bool = False) -> None:
    path = Path(path)
    with open(path, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<I", VERSION))
        blob = config_to_json(cfg).encode("utf-8")
        out.write(struct.pack("<I", len(blob)))
        out.write(blob)
        names = store.names()
        out.write(struct.pack("<I", len(names)))
        for name in names:
            _write_record(out, name, store[name])
        out.write(struct.pack("<B", 1 if with_moments else 0))
        if with_moments:
            out.write(struct.pack("<Q", store.step))
            for name in names:
                p = store.param(name)
                _write_record(out, f"{name}.adam_m", p.adam_m)
                _write_record(out, f"{name}.adam_v", p.adam_v)


def load_checkpoint(path, dtype=np.float32) -> tuple[RNAN, ParamStore]:
    """Rebuild the network described by a checkpoint and bind its weights."""
    path = Path(path)
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise ConfigurationError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != VERSION:
            raise ConfigurationError(f"{path}: unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", _read_exact(fh, 4))
        cfg = config_from_json(_read_exact(fh, cfg_len).decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        values = dict(_read_record(fh) for _ in range(count))
        (has_moments,) = struct.unpack("<B", _read_exact(fh, 1))
        moments: dict[str, np.ndarray] = {}
        step = 0
        if has_moments:
            (step,) = struct.unpack("<Q", _read_exact(fh, 8))
            moments = dict(_read_record(fh) for _ in range(2 * count))

    net, store = build_network(cfg, seed=0, dtype=dtype, zero_init=True)
    if store.names() != list(values):
        raise ConfigurationError(f"{path}: parameters do not match the stored architecture")
    for name, val in values.items():
        p = store.param(name)
        if p.value.shape != val.shape:
            raise ConfigurationError(f"{path}: {name} has shape {val.shape}, expected {p.value.shape}")
        np.copyto(p.value, val)
        if has_moments:
            np.copyto(p.adam_m, moments[f"{name}.adam_m"])
            np.copyto(p.adam_v, moments[f"{name}.adam_v"])
    store.step = step
    return net, store
