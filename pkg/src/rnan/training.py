"""L2 training with Adam, patch sampling, evaluation, self-ensembling.

The trainer is deterministic end to end: parameter init, patch draws,
augmentation, and degradation noise all come from Philox streams keyed by
(seed, purpose, iteration), so a rerun reproduces the loss log bit for bit.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .degrade import DegradationSpec, add_awgn, degrade_pair, jpeg_degrade, mosaic_bayer
from .errors import ConfigurationError
from .metrics import MetricResult, rgb_to_y, score_pair
from .network import RNAN, NetworkConfig, ParamStore, build_network
from .rng import stream
from .tensor import Tensor4


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    patch_size: int = 48
    lr0: float = 1e-4
    lr_halve_every: int = 200_000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_iters: int = 1000
    seed: int = 0
    checkpoint_every: int = 0  # 0 means final checkpoint only
    augment: bool = True  # random flips and 90-degree rotations
    fixed_degradation: bool = False  # freeze noise draws across iterations (overfit runs)

    def __post_init__(self):
        if min(self.batch_size, self.patch_size, self.max_iters + 1) < 1:
            raise ConfigurationError("batch_size, patch_size must be >= 1 and max_iters >= 0")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigurationError("Adam betas must lie in (0, 1)")
        if self.lr0 <= 0 or self.lr_halve_every < 1:
            raise ConfigurationError("lr0 must be positive and lr_halve_every >= 1")


@dataclass(frozen=True)
class PatchPair:
    lq: Tensor4
    hq: Tensor4
    image_id: int
    top_left: tuple[int, int]


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries (iteration, lr, grad_norm)."""

    def __init__(self, iteration: int, lr: float, grad_norm: float):
        super().__init__(
            f"non-finite loss at iteration {iteration} (lr={lr:g}, grad_norm={grad_norm:g})"
        )
        self.iteration = iteration
        self.lr = lr
        self.grad_norm = grad_norm


def l2_loss(pred: Tensor4, target: Tensor4):
    """Mean squared error and its gradient with respect to ``pred``."""
    if pred.shape != target.shape:
        raise ConfigurationError(f"l2_loss: shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff, dtype=np.float64))
    return loss, (2.0 / diff.size) * diff


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update with bias correction, in place on the store."""
    names = store.names()
    if set(grads) != set(names):
        raise ConfigurationError("adam_step: gradient names do not match the store")
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name in names:
        p = store.param(name)
        g = grads[name]
        if g.shape != p.value.shape:
            raise ConfigurationError(f"adam_step: gradient for {name!r} has shape {g.shape}")
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * g
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * g * g
        p.value -= lr * (p.adam_m / c1) / (np.sqrt(p.adam_v / c2) + eps)


def lr_at(iteration: int, lr0: float = 1e-4, halve_every: int = 200_000) -> float:
    """Step learning-rate schedule: halved every ``halve_every`` iterations."""
    if iteration < 0:
        raise ConfigurationError("iteration must be >= 0")
    return lr0 * 0.5 ** (iteration // halve_every)


def _dihedral(x: np.ndarray, op: int) -> np.ndarray:
    """Apply one of the 8 flip/rotation symmetries (op 0 is the identity)."""
    if op & 4:
        x = x[:, :, :, ::-1]
    return np.rot90(x, op & 3, axes=(2, 3))


def _dihedral_inv(x: np.ndarray, op: int) -> np.ndarray:
    x = np.rot90(x, -(op & 3), axes=(2, 3))
    if op & 4:
        x = x[:, :, :, ::-1]
    return x


def _sampling_pool(corpus, spec: DegradationSpec):
    """Per-image (lq_or_None, hq_basis) pairs the sampler crops from.

    JPEG restoration works on the luminance plane, so colour corpora are
    converted up front; super-resolution inputs are degraded whole so crops
    of the low-quality image stay aligned with the high-quality ones.
    """
    pool = []
    for img in corpus:
        if spec.kind == "jpeg" and img.shape[1] == 3:
            img = rgb_to_y(img)
        if spec.kind == "bicubic_sr":
            lq, hq = degrade_pair(img, spec)
            pool.append((lq, hq))
        else:
            pool.append((None, img))
    return pool


def sample_patches(
    corpus, spec: DegradationSpec, cfg: TrainConfig, iteration: int, pool=None
) -> list[PatchPair]:
    """Draw one seeded batch of aligned (low-quality, high-quality) crops."""
    if not corpus:
        raise ConfigurationError("empty corpus")
    if pool is None:
        pool = _sampling_pool(corpus, spec)
    p = cfg.patch_size
    eligible = [i for i, (_, hq) in enumerate(pool) if hq.shape[2] >= p and hq.shape[3] >= p]
    if len(eligible) < len(pool):
        warnings.warn(f"{len(pool) - len(eligible)} corpus images smaller than {p}x{p} skipped")
    if not eligible:
        raise ConfigurationError(f"no corpus image is at least {p}x{p}")
    rng = stream(cfg.seed, 0xBA7C, iteration)
    batch = []
    for k in range(cfg.batch_size):
        idx = eligible[int(rng.integers(len(eligible)))]
        lq_img, hq_img = pool[idx]
        top = int(rng.integers(hq_img.shape[2] - p + 1))
        left = int(rng.integers(hq_img.shape[3] - p + 1))
        hq = hq_img[:, :, top : top + p, left : left + p]
        noise_iter = 0 if cfg.fixed_degradation else iteration
        if spec.kind == "awgn":
            lq = add_awgn(hq, spec.sigma, (spec.seed, cfg.seed, noise_iter, k))
        elif spec.kind == "mosaic":
            lq = mosaic_bayer(hq, spec.pattern)
        elif spec.kind == "jpeg":
            lq = jpeg_degrade(hq, spec.quality)
        else:  # bicubic_sr: crop the pre-degraded image at the same spot
            lq = lq_img[:, :, top : top + p, left : left + p]
        if cfg.augment:
            op = int(rng.integers(8))
            lq, hq = _dihedral(lq, op), _dihedral(hq, op)
        batch.append(PatchPair(np.ascontiguousarray(lq), np.ascontiguousarray(hq), idx, (top, left)))
    return batch


@dataclass
class TrainResult:
    net: RNAN
    store: ParamStore
    loss_log: list[tuple[int, float, float]]
    checkpoint_path: Path | None = None
    log_path: Path | None = None


def train(
    corpus,
    spec: DegradationSpec,
    net_cfg: NetworkConfig,
    train_cfg: TrainConfig,
    out_dir=None,
) -> TrainResult:
    """Run the sample / forward / loss / backward / Adam loop.

    When ``out_dir`` is given, writes ``loss_log.csv`` (``iter,lr,loss``),
    periodic checkpoints with Adam moments, and a final checkpoint.
    """
    net, store = build_network(net_cfg, seed=train_cfg.seed)
    pool = _sampling_pool(corpus, spec)
    loss_log: list[tuple[int, float, float]] = []
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    for iteration in range(train_cfg.max_iters):
        lr = lr_at(iteration, train_cfg.lr0, train_cfg.lr_halve_every)
        batch = sample_patches(corpus, spec, train_cfg, iteration, pool=pool)
        x = np.concatenate([b.lq for b in batch]).astype(store.dtype)
        target = np.concatenate([b.hq for b in batch]).astype(store.dtype)
        out, cache = net.forward(x)
        loss, gout = l2_loss(out, target)
        grads = store.zero_grads()
        net.backward(gout, cache, grads)
        if not math.isfinite(loss):
            gnorm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            raise TrainingDiverged(iteration, lr, gnorm)
        adam_step(
            store, grads, lr, train_cfg.adam_beta1, train_cfg.adam_beta2, train_cfg.adam_eps
        )
        loss_log.append((iteration, lr, loss))
        if (
            out_dir is not None
            and train_cfg.checkpoint_every
            and (iteration + 1) % train_cfg.checkpoint_every == 0
            and iteration + 1 < train_cfg.max_iters
        ):
            save_checkpoint(
                out_dir / f"checkpoint_{iteration + 1:07d}.rnan", store, net_cfg, with_moments=True
            )

    result = TrainResult(net=net, store=store, loss_log=loss_log)
    if out_dir is not None:
        result.checkpoint_path = out_dir / "checkpoint_final.rnan"
        save_checkpoint(result.checkpoint_path, store, net_cfg)
        result.log_path = out_dir / "loss_log.csv"
        with open(result.log_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "lr", "loss"])
            for it, lr, loss in loss_log:
                writer.writerow([it, repr(lr), repr(loss)])
    return result


def self_ensemble_infer(img: Tensor4, net: RNAN) -> Tensor4:
    """Average the network over the 8 dihedral transforms of the input."""
    total = None
    for op in range(8):
        t = np.ascontiguousarray(_dihedral(img, op))
        y = _dihedral_inv(net.infer(t), op)
        total = y if total is None else total + y
    return total / 8.0


@dataclass
class EvalRow:
    name: str
    result: MetricResult


@dataclass
class EvalResult:
    rows: list[EvalRow]
    mean_psnr: float
    mean_ssim: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image", "psnr_db", "ssim"])
            for row in self.rows:
                writer.writerow([row.name, f"{row.result.psnr_db:.4f}", f"{row.result.ssim:.6f}"])
            writer.writerow(["mean", f"{self.mean_psnr:.4f}", f"{self.mean_ssim:.6f}"])


def evaluate(
    images,
    spec: DegradationSpec,
    net: RNAN,
    self_ensemble: bool = False,
    y_channel: bool = False,
    threads: int = 1,
) -> EvalResult:
    """Degrade, restore, and score a set of named high-quality images.

    ``images`` is a list of (name, tensor) pairs.  Degradation noise is
    keyed per image index, so runs are reproducible regardless of order of
    execution; scoring for super-resolution drops ``scale`` border pixels.
    """
    if not images:
        raise ConfigurationError("no images to evaluate")

    def one(item) -> EvalRow:
        idx, (name, hq) = item
        lq, hq_ref = degrade_pair(hq, spec, seed=(spec.seed, idx))
        restored = self_ensemble_infer(lq, net) if self_ensemble else net.infer(lq)
        if spec.kind == "bicubic_sr":
            s = spec.scale
            restored, hq_ref = restored[:, :, s:-s, s:-s], hq_ref[:, :, s:-s, s:-s]
        return EvalRow(name, score_pair(restored, hq_ref, y_channel=y_channel))

    items = list(enumerate(images))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(item) for item in items]
    mean_psnr = sum(r.result.psnr_db for r in rows) / len(rows)
    mean_ssim = sum(r.result.ssim for r in rows) / len(rows)
    return EvalResult(rows=rows, mean_psnr=mean_psnr, mean_ssim=mean_ssim)
