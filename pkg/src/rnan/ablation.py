"""Component ablation grid.

Eight architecture variants toggling the mask branch, the non-local layer,
and the block counts, trained and scored under identical settings.  The
grid emits a CSV with one column per case so the structural effect of each
component can be read off directly.  At desk scale the PSNR ordering is
seed-sensitive; the harness asserts nothing about it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

from .degrade import DegradationSpec
from .network import BlockConfig, NetworkConfig
from .training import TrainConfig, evaluate, train


@dataclass(frozen=True)
class AblationCase:
    index: int
    mask_branch: bool
    non_local: bool
    local_blocks: int
    nonlocal_blocks: int


# mask on/off x non-local on/off, then block-count sweeps
ABLATION_GRID = (
    AblationCase(1, False, False, 7, 0),
    AblationCase(2, True, False, 7, 0),
    AblationCase(3, False, True, 5, 2),
    AblationCase(4, True, True, 5, 2),
    AblationCase(5, True, True, 1, 1),
    AblationCase(6, True, True, 2, 2),
    AblationCase(7, True, True, 5, 1),
    AblationCase(8, True, True, 8, 2),
)


def case_network(case: AblationCase, base_block: BlockConfig, in_channels: int) -> NetworkConfig:
    block = replace(
        base_block,
        fusion_mode=base_block.fusion_mode if case.mask_branch else "none",
    )
    return NetworkConfig(
        num_local_blocks=case.local_blocks,
        num_nonlocal_blocks=case.nonlocal_blocks if case.non_local else 0,
        in_channels=in_channels,
        block=block,
    )


@dataclass
class AblationRow:
    case: AblationCase
    psnr_db: float
    ssim: float


def run_ablation(
    corpus,
    val_images,
    spec: DegradationSpec,
    base_block: BlockConfig,
    train_cfg: TrainConfig,
    csv_path=None,
    cases=ABLATION_GRID,
) -> list[AblationRow]:
    """Train and score every case of the grid under one shared setting."""
    in_channels = corpus[0].shape[1]
    rows = []
    for case in cases:
        net_cfg = case_network(case, base_block, in_channels)
        result = train(corpus, spec, net_cfg, train_cfg)
        scores = evaluate(val_images, spec, result.net)
        rows.append(AblationRow(case, scores.mean_psnr, scores.mean_ssim))
    if csv_path is not None:
        write_ablation_csv(csv_path, rows)
    return rows


def write_ablation_csv(path, rows: list[AblationRow]) -> None:
    """One column per case, cases side by side."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_index"] + [str(r.case.index) for r in rows])
        writer.writerow(["mask_branch"] + ["yes" if r.case.mask_branch else "no" for r in rows])
        writer.writerow(["non_local_block"] + ["yes" if r.case.non_local else "no" for r in rows])
        writer.writerow(["local_blocks"] + [str(r.case.local_blocks) for r in rows])
        writer.writerow(["nonlocal_blocks"] + [str(r.case.nonlocal_blocks) for r in rows])
        writer.writerow(["psnr_db"] + [f"{r.psnr_db:.2f}" for r in rows])
