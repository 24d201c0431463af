"""Class-imbalance segmentation losses with analytic logit gradients.

The centrepiece is the asymmetric focal margin loss and its hybrid with
the focal Tversky loss (``LossKind.OURS``). Everything else in the package
exists to check, compare and exercise those losses: finite-difference
gradient checks, a reduction-identity audit, segmentation metrics, a
seeded synthetic crack generator and a tiny per-pixel trainer.
"""

from .errors import (
    DivergenceError,
    FocalMarginError,
    FormatError,
    GenerationError,
    ParameterError,
    ShapeError,
)
from .losses import LossKind, LossOutput, LossParams, loss_value_and_grad, split_terms
from .metrics import ConfusionCounts, MetricReport, confusion, metrics
from .synth import SynthConfig, SynthSample, generate_dataset
from .trainer import TrainConfig, compare_losses, train

__version__ = "0.1.0"

__all__ = [
    "ConfusionCounts",
    "DivergenceError",
    "FocalMarginError",
    "FormatError",
    "GenerationError",
    "LossKind",
    "LossOutput",
    "LossParams",
    "MetricReport",
    "ParameterError",
    "ShapeError",
    "SynthConfig",
    "SynthSample",
    "TrainConfig",
    "compare_losses",
    "confusion",
    "generate_dataset",
    "loss_value_and_grad",
    "metrics",
    "split_terms",
    "train",
]
