"""Batch command-line interface.

Subcommands: ``degrade``, ``train``, ``infer``, ``eval``, ``gradcheck``,
``params``.  Settings come from an INI-style config file (sections
``[network] [block] [degrade] [train] [paths]``, see README) with
command-line flags taking precedence.  Every command exits non-zero with a
one-line diagnostic on error, and the ``RNAN_THREADS`` environment variable
caps internal parallelism (default 1, keeping runs deterministic).
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import imgio
from .checkpoint import load_checkpoint
from .degrade import DegradationSpec, degrade_pair
from .errors import ConfigurationError
from .gradcheck import default_suite
from .metrics import psnr, rgb_to_y
from .network import BlockConfig, NetworkConfig, count_parameters, parameter_breakdown
from .training import TrainConfig, TrainingDiverged, evaluate, self_ensemble_infer, train

GRADCHECK_TOL = 1e-4

_KIND_FLAGS = {"sigma": "awgn", "quality": "jpeg", "scale": "bicubic_sr", "pattern": "mosaic"}


@dataclass
class CliConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    degrade: DegradationSpec = field(default_factory=lambda: DegradationSpec(kind="awgn", sigma=25))
    paths: dict[str, Path] = field(default_factory=dict)


def _section(parser: configparser.ConfigParser, name: str, caster) -> dict:
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        out[key] = caster(name, key, raw)
    return out


def _cast_into(cls, name, key, raw):
    types = {f.name: f.type for f in fields(cls)}
    if key not in types:
        raise ConfigurationError(f"[{name}] has unknown key {key!r}")
    t = types[key]
    if t in ("bool", bool):
        if raw.lower() not in ("true", "false", "0", "1", "yes", "no"):
            raise ConfigurationError(f"[{name}] {key} = {raw!r} is not a boolean")
        return raw.lower() in ("true", "1", "yes")
    if t in ("int", int):
        return int(raw)
    if t in ("float", float):
        return float(raw)
    return raw


def load_config(path) -> CliConfig:
    """Read the line-oriented ``key = value`` config file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"cannot read config file {path}")
    block_kwargs = _section(parser, "block", lambda n, k, r: _cast_into(BlockConfig, n, k, r))
    net_kwargs = {}
    if parser.has_section("network"):
        for key, raw in parser.items("network"):
            if key == "nonlocal_positions":
                net_kwargs[key] = tuple(int(v) for v in raw.replace(",", " ").split())
            else:
                net_kwargs[key] = _cast_into(NetworkConfig, "network", key, raw)
    train_kwargs = _section(parser, "train", lambda n, k, r: _cast_into(TrainConfig, n, k, r))
    degrade_kwargs = _section(parser, "degrade", lambda n, k, r: _cast_into(DegradationSpec, n, k, r))
    paths = {}
    if parser.has_section("paths"):
        for key, raw in parser.items("paths"):
            if key not in ("corpus_dir", "eval_dir", "checkpoint", "out_dir"):
                raise ConfigurationError(f"[paths] has unknown key {key!r}")
            paths[key] = Path(raw)
    cfg = CliConfig(
        network=NetworkConfig(block=BlockConfig(**block_kwargs), **net_kwargs),
        train=TrainConfig(**train_kwargs),
        degrade=DegradationSpec(**degrade_kwargs) if degrade_kwargs else CliConfig().degrade,
        paths=paths,
    )
    for key, p in paths.items():
        if key in ("corpus_dir", "eval_dir") and not p.is_dir():
            raise ConfigurationError(f"[paths] {key} = {p} is not a directory")
    return cfg


def _apply_degrade_flags(spec: DegradationSpec, args) -> DegradationSpec:
    """Merge degradation flags, rejecting combinations that disagree."""
    given = {name: getattr(args, name) for name in _KIND_FLAGS if getattr(args, name) is not None}
    kind = getattr(args, "kind", None)
    if kind is None:
        implied = {_KIND_FLAGS[n] for n in given}
        if len(implied) > 1:
            raise ConfigurationError(f"conflicting degradation flags: {sorted(given)}")
        kind = implied.pop() if implied else spec.kind
    else:
        wrong = [n for n in given if _KIND_FLAGS[n] != kind]
        if wrong:
            raise ConfigurationError(f"flags {wrong} do not apply to kind {kind!r}")
    updates = dict(kind=kind, **given)
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    return replace(spec, **updates)


def _announce(row_name: str, value: float) -> None:
    print(f"{row_name}  psnr={value:.4f} dB")


def cmd_degrade(args) -> int:
    cfg = load_config(args.config) if args.config else CliConfig()
    spec = _apply_degrade_flags(cfg.degrade, args)
    in_dir = Path(args.in_dir) if args.in_dir else cfg.paths.get("corpus_dir")
    out_dir = Path(args.out) if args.out else cfg.paths.get("out_dir")
    if in_dir is None or out_dir is None:
        raise ConfigurationError("degrade needs an input directory and --out")
    paths = imgio.list_images(in_dir)
    if not paths:
        raise ConfigurationError(f"no images found in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    total = 0.0
    for idx, path in enumerate(paths):
        img = imgio.load_image(path)
        lq, ref = degrade_pair(img, spec, seed=(spec.seed, idx))
        suffix = path.suffix.lower()
        if suffix in (".pgm", ".ppm"):
            suffix = ".pgm" if lq.shape[1] == 1 else ".ppm"
        target = out_dir / (path.stem + suffix)
        imgio.save_image(target, lq)
        score = psnr(lq, ref)
        total += score
        _announce(path.name, score)
    _announce("mean", total / len(paths))
    return 0


def _load_corpus(directory) -> list[np.ndarray]:
    paths = imgio.list_images(directory)
    if not paths:
        raise ConfigurationError(f"no images found in {directory}")
    return [imgio.load_image(p) for p in paths]


def cmd_train(args) -> int:
    if not args.config:
        raise ConfigurationError("train needs --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.train = replace(cfg.train, seed=args.seed)
        cfg.degrade = replace(cfg.degrade, seed=args.seed)
    corpus_dir = cfg.paths.get("corpus_dir")
    out_dir = Path(args.out) if args.out else cfg.paths.get("out_dir")
    if corpus_dir is None or out_dir is None:
        raise ConfigurationError("train needs [paths] corpus_dir and out_dir (or --out)")
    corpus = _load_corpus(corpus_dir)
    result = train(corpus, cfg.degrade, cfg.network, cfg.train, out_dir=out_dir)
    final = result.loss_log[-1][2] if result.loss_log else float("nan")
    print(f"trained {cfg.train.max_iters} iterations, final loss {final:.6g}")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"loss log:   {result.log_path}")
    return 0


def cmd_infer(args) -> int:
    net, _ = load_checkpoint(args.checkpoint)
    source = Path(args.input)
    paths = imgio.list_images(source) if source.is_dir() else [source]
    if not paths:
        raise ConfigurationError(f"no images found in {source}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        img = imgio.load_image(path)
        if img.shape[1] == 3 and net.cfg.in_channels == 1:
            img = rgb_to_y(img)
        if img.shape[1] != net.cfg.in_channels:
            raise ConfigurationError(
                f"{path.name}: {img.shape[1]} channels, network expects {net.cfg.in_channels}"
            )
        restored = self_ensemble_infer(img, net) if args.self_ensemble else net.infer(img)
        suffix = path.suffix.lower()
        if suffix in (".pgm", ".ppm"):
            suffix = ".pgm" if restored.shape[1] == 1 else ".ppm"
        imgio.save_image(out_dir / (path.stem + suffix), restored)
        print(f"{path.name} -> {out_dir / (path.stem + suffix)}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config) if args.config else CliConfig()
    spec = _apply_degrade_flags(cfg.degrade, args)
    net, _ = load_checkpoint(args.checkpoint)
    eval_dir = Path(args.dir) if args.dir else cfg.paths.get("eval_dir")
    if eval_dir is None:
        raise ConfigurationError("eval needs an image directory")
    images = []
    for path in imgio.list_images(eval_dir):
        try:
            img = imgio.load_image(path)
        except (ConfigurationError, OSError) as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
            continue
        if img.shape[1] != net.cfg.in_channels and not (
            img.shape[1] == 3 and net.cfg.in_channels == 1
        ):
            print(f"warning: skipping {path.name}: channel mismatch", file=sys.stderr)
            continue
        if img.shape[1] == 3 and net.cfg.in_channels == 1 and spec.kind != "jpeg":
            img = rgb_to_y(img)
        images.append((path.name, img))
    if not images:
        raise ConfigurationError(f"no usable images in {eval_dir}")
    result = evaluate(
        images,
        spec,
        net,
        self_ensemble=args.self_ensemble,
        y_channel=args.y_channel,
        threads=thread_count(),
    )
    for row in result.rows:
        print(f"{row.name}  psnr={row.result.psnr_db:.4f} dB  ssim={row.result.ssim:.6f}")
    print(f"mean  psnr={result.mean_psnr:.4f} dB  ssim={result.mean_ssim:.6f}")
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "eval.csv"
    result.write_csv(csv_path)
    print(f"wrote {csv_path}")
    return 0


def cmd_gradcheck(args) -> int:
    reports = default_suite()
    failed = 0
    for rep in reports:
        ok = rep.ok(GRADCHECK_TOL)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {rep.op_name:28s} max_rel_error={rep.max_rel_error:.3e}")
    print(f"{len(reports) - failed}/{len(reports)} gradient checks passed")
    return 0 if failed == 0 else 1


def cmd_params(args) -> int:
    cfg = load_config(args.config).network if args.config else NetworkConfig()
    for section, count in parameter_breakdown(cfg):
        print(f"{section:12s} {count:>12,}")
    print(f"{'total':12s} {count_parameters(cfg):>12,}")
    return 0


def thread_count() -> int:
    raw = os.environ.get("RNAN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"RNAN_THREADS={raw!r} is not an integer")


def _add_degrade_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=("awgn", "mosaic", "jpeg", "bicubic_sr"))
    p.add_argument("--sigma", type=float, help="noise std on the 0-255 scale (awgn)")
    p.add_argument("--quality", type=int, help="JPEG quality 1-100")
    p.add_argument("--scale", type=int, help="super-resolution scale 2/3/4")
    p.add_argument("--pattern", choices=("RGGB", "BGGR", "GRBG", "GBRG"), help="Bayer layout")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="write degraded copies of a directory of images")
    p.add_argument("in_dir", nargs="?", help="input directory (or [paths] corpus_dir)")
    p.add_argument("--config")
    _add_degrade_flags(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("train", help="train a model per the config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory override")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="restore images with a trained checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("input", help="image file or directory")
    p.add_argument("--out", required=True)
    p.add_argument("--self-ensemble", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="degrade, restore, and score a directory")
    p.add_argument("checkpoint")
    p.add_argument("dir", nargs="?", help="high-quality image directory")
    p.add_argument("--config")
    _add_degrade_flags(p)
    p.add_argument("--y-channel", action="store_true")
    p.add_argument("--self-ensemble", action="store_true")
    p.add_argument("--out", help="directory for eval.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="run the finite-difference gradient suite")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("params", help="print the learnable parameter count")
    p.add_argument("--config")
    p.set_defaults(func=cmd_params)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, TrainingDiverged, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
