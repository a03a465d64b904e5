"""Ready-made configurations.

``full_scale`` is the complete architecture; ``tiny`` and
``desk_train`` are the desk-scale settings used by the demos and the
verification suite, sized so a training run finishes on one CPU core.
"""

from __future__ import annotations

from .network import BlockConfig, NetworkConfig
from .training import TrainConfig


def full_scale(in_channels: int = 3) -> NetworkConfig:
    """8 local + 2 non-local blocks, 64 features, q = t = 2, m = 1."""
    return NetworkConfig(in_channels=in_channels)


def tiny(in_channels: int = 1) -> NetworkConfig:
    """1 local + 1 non-local block, 16 features, q = t = m = 1."""
    return NetworkConfig(
        num_local_blocks=1,
        num_nonlocal_blocks=1,
        in_channels=in_channels,
        block=BlockConfig(q=1, t=1, m=1, features=16, nlb_channels=8),
    )


def desk_train(max_iters: int = 2000, seed: int = 0, **overrides) -> TrainConfig:
    """Small-batch trainer defaults: batch 4, patch 32, lr 1e-3 halving at 5k."""
    args = dict(
        batch_size=4,
        patch_size=32,
        lr0=1e-3,
        lr_halve_every=5000,
        max_iters=max_iters,
        seed=seed,
    )
    args.update(overrides)
    return TrainConfig(**args)
