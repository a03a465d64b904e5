"""Residual non-local attention network for image restoration.

A from-scratch numpy implementation: differentiable tensor primitives with
hand-derived gradients, the attention-block architecture, degradation
generators, PSNR/SSIM metrics, an Adam trainer, and a batch CLI.
"""

from .ablation import ABLATION_GRID, AblationCase, case_network, run_ablation
from .checkpoint import load_checkpoint, save_checkpoint
from .degrade import (
    DegradationSpec,
    add_awgn,
    bicubic_resize,
    degrade_pair,
    jpeg_degrade,
    mosaic_bayer,
)
from .errors import ConfigurationError
from .gradcheck import default_suite, grad_check
from .metrics import MetricResult, psnr, rgb_to_y, score_pair, ssim
from .network import (
    RNAN,
    BlockConfig,
    NetworkConfig,
    ParamStore,
    build_network,
    count_parameters,
    fuse,
    parameter_breakdown,
)
from .presets import desk_train, full_scale, tiny
from .synthetic import make_corpus, make_image
from .tensor import (
    ConvSpec,
    GradCheckReport,
    Tensor4,
    add,
    conv2d,
    conv2d_transpose,
    matmul,
    mul,
    relu,
    sigmoid,
    softmax_rows,
)
from .training import (
    PatchPair,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    evaluate,
    l2_loss,
    lr_at,
    sample_patches,
    self_ensemble_infer,
    train,
)

__all__ = [
    "ABLATION_GRID",
    "AblationCase",
    "BlockConfig",
    "ConfigurationError",
    "ConvSpec",
    "DegradationSpec",
    "GradCheckReport",
    "MetricResult",
    "NetworkConfig",
    "ParamStore",
    "PatchPair",
    "RNAN",
    "Tensor4",
    "TrainConfig",
    "TrainingDiverged",
    "adam_step",
    "add",
    "add_awgn",
    "bicubic_resize",
    "build_network",
    "case_network",
    "conv2d",
    "conv2d_transpose",
    "count_parameters",
    "default_suite",
    "degrade_pair",
    "desk_train",
    "evaluate",
    "fuse",
    "grad_check",
    "jpeg_degrade",
    "l2_loss",
    "load_checkpoint",
    "lr_at",
    "make_corpus",
    "make_image",
    "matmul",
    "mosaic_bayer",
    "mul",
    "full_scale",
    "parameter_breakdown",
    "psnr",
    "relu",
    "rgb_to_y",
    "run_ablation",
    "sample_patches",
    "save_checkpoint",
    "score_pair",
    "self_ensemble_infer",
    "sigmoid",
    "softmax_rows",
    "ssim",
    "tiny",
    "train",
]

__version__ = "0.1.0"
