"""Per-pixel linear classifier trained by full-batch gradient descent.

The model computes ``z = sum_k w_k * f_k + b`` on every pixel and is
trained under any :class:`~focalmargin.losses.LossKind`. It is small
enough that a whole loss comparison runs on a laptop in seconds, which is
the point: it isolates how each loss's gradient shapes the decision
boundary on imbalanced data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ParameterError, ShapeError
from .grid import logit_scalar, sigmoid
from .losses import LossKind, LossParams, loss_value_and_grad
from .metrics import (
    DEFAULT_THRESHOLD,
    METRIC_NAMES,
    MetricReport,
    binarize,
    confusion,
    metrics,
    summarize,
    ConfusionCounts,
)
from .synth import SynthConfig, SynthSample, generate_dataset

DEFAULT_LEARNING_RATE = 0.5
DEFAULT_EPOCHS = 100


@dataclass(frozen=True)
class PixelModel:
    weights: tuple[float, ...]
    bias: float

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "bias": self.bias}


@dataclass(frozen=True)
class TrainConfig:
    dataset: tuple[SynthSample, ...]
    loss_kind: LossKind = LossKind.OURS
    loss_params: LossParams = field(default_factory=LossParams)
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    val_split: float = 0.25
    seed: int = 0
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "dataset", tuple(self.dataset))
        object.__setattr__(self, "loss_kind", LossKind.parse(self.loss_kind))
        if len(self.dataset) < 2:
            raise ParameterError("need at least 2 samples so train and validation are non-empty")
        if not self.learning_rate >= 0 or not math.isfinite(self.learning_rate):
            raise ParameterError(f"learning_rate must be a finite number >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.val_split < 1.0:
            raise ParameterError(f"val_split must lie in (0, 1), got {self.val_split}")
        if not 0.0 < self.threshold < 1.0:
            raise ParameterError(f"threshold must lie in (0, 1), got {self.threshold}")
        channels = {len(s.features) for s in self.dataset}
        if len(channels) != 1:
            raise ShapeError(sorted(channels)[:1], sorted(channels)[1:2], "feature channel counts")

    @property
    def n_train(self) -> int:
        n = len(self.dataset)
        return min(max(1, round((1.0 - self.val_split) * n)), n - 1)

    def echo(self) -> dict:
        """Config without the dataset arrays, for reports."""
        return {
            "loss_kind": self.loss_kind.value,
            "loss_params": self.loss_params.to_dict(),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "val_split": self.val_split,
            "seed": self.seed,
            "threshold": self.threshold,
            "n_samples": len(self.dataset),
            "n_train": self.n_train,
        }


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_metrics: MetricReport

    def to_dict(self, percent: bool = False) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_metrics": self.val_metrics.to_dict(percent),
        }


@dataclass
class TrainReport:
    history: list[EpochRecord]
    initial_model: PixelModel
    model: PixelModel
    seed: int
    config: dict

    @property
    def final_metrics(self) -> MetricReport:
        return self.history[-1].val_metrics

    def to_dict(self, percent: bool = False) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "initial_model": self.initial_model.to_dict(),
            "model": self.model.to_dict(),
            "final_val_metrics": self.final_metrics.to_dict(percent),
            "history": [r.to_dict(percent) for r in self.history],
        }


def forward(model: PixelModel, features) -> np.ndarray:
    """Per-pixel logits ``sum_k w_k * f_k + b``."""
    if len(features) != len(model.weights):
        raise ShapeError(
            (len(features),), (len(model.weights),), "feature channels and model weights"
        )
    z = np.full(np.shape(features[0]), model.bias, dtype=np.float64)
    for w, f in zip(model.weights, features):
        z = z + w * np.asarray(f, dtype=np.float64)
    return z


def initial_model(train: list[SynthSample], eps: float) -> PixelModel:
    """Zero weights and a bias equal to the logit of the training foreground rate."""
    fg = sum(float(s.mask.sum()) for s in train)
    total = sum(s.mask.size for s in train)
    return PixelModel(weights=(0.0,) * len(train[0].features), bias=logit_scalar(fg / total, eps))


def _evaluate(model, samples, kind, params, threshold):
    losses = []
    counts = ConfusionCounts()
    for s in samples:
        z = forward(model, s.features)
        losses.append(loss_value_and_grad(kind, z, s.mask, params).value)
        counts = counts + confusion(binarize(sigmoid(z), threshold), s.mask)
    return math.fsum(losses) / len(losses), metrics(counts)


def train(cfg: TrainConfig) -> TrainReport:
    """Full-batch gradient descent, one step per epoch.

    For each epoch the training loss and gradient are taken at the current
    parameters (averaged over the training samples), the step is applied,
    and the updated model is scored on the validation samples.
    """
    train_set = list(cfg.dataset[: cfg.n_train])
    val_set = list(cfg.dataset[cfg.n_train :])
    kind, params = cfg.loss_kind, cfg.loss_params
    model0 = initial_model(train_set, params.eps)
    w = np.array(model0.weights, dtype=np.float64)
    b = model0.bias
    n_ch = len(w)

    history = []
    for epoch in range(1, cfg.epochs + 1):
        model = PixelModel(tuple(float(x) for x in w), float(b))
        grad_w = np.zeros(n_ch)
        grad_b = 0.0
        losses = []
        for s in train_set:
            out = loss_value_and_grad(kind, forward(model, s.features), s.mask, params)
            losses.append(out.value)
            g = out.grad_logits
            for k in range(n_ch):
                grad_w[k] += float(np.sum(g * s.features[k]))
            grad_b += float(np.sum(g))
        train_loss = math.fsum(losses) / len(losses)
        if not math.isfinite(train_loss):
            raise DivergenceError(epoch, f"non-finite training loss {train_loss}")
        # overflow here is reported as divergence just below
        with np.errstate(over="ignore", invalid="ignore"):
            w = w - cfg.learning_rate * grad_w / len(train_set)
            b = b - cfg.learning_rate * grad_b / len(train_set)
        if not (np.all(np.isfinite(w)) and math.isfinite(b)):
            raise DivergenceError(epoch, "non-finite model parameters")
        model = PixelModel(tuple(float(x) for x in w), float(b))
        val_loss, val_report = _evaluate(model, val_set, kind, params, cfg.threshold)
        history.append(EpochRecord(epoch, train_loss, val_loss, val_report))

    return TrainReport(
        history=history,
        initial_model=model0,
        model=PixelModel(tuple(float(x) for x in w), float(b)),
        seed=cfg.seed,
        config=cfg.echo(),
    )


@dataclass
class ComparisonRow:
    label: str
    kind: str
    params: dict
    summary: dict
    runs: list[dict | None]
    errors: list[str]

    def to_dict(self, percent: bool = False) -> dict:
        scale = 100.0 if percent else 1.0
        summary = {}
        for name, stats in self.summary.items():
            summary[name] = {
                "mean": None if stats["mean"] is None else stats["mean"] * scale,
                "std": None if stats["std"] is None else stats["std"] * scale,
                "n": stats["n"],
            }
        runs = [
            None if r is None else {k: (None if v is None else v * scale) for k, v in r.items()}
            for r in self.runs
        ]
        return {
            "label": self.label,
            "kind": self.kind,
            "params": self.params,
            "metrics": summary,
            "runs": runs,
            "errors": self.errors,
        }


def describe_params(kind: LossKind, params: LossParams) -> str:
    """Short parameter string in the style of a results table, listing only what the kind uses."""
    used = {
        LossKind.BCE: (),
        LossKind.DICE_SORENSEN: ("smooth",),
        LossKind.DICE_SQUARED: ("smooth",),
        LossKind.BCEDICE: ("smooth",),
        LossKind.FOCAL: ("gamma_hat",),
        LossKind.ASYM_FOCAL: ("gamma_hat",),
        LossKind.ASYM_LARGE_MARGIN: ("margin",),
        LossKind.TVERSKY: ("delta",),
        LossKind.FOCAL_TVERSKY: ("delta", "gamma_tv"),
        LossKind.ASYM_FOCAL_TVERSKY: ("delta", "gamma_tv"),
        LossKind.SYM_FOCAL_MARGIN: ("gamma_hat", "margin"),
        LossKind.ASYM_FOCAL_MARGIN: ("gamma_hat", "margin"),
        LossKind.HYBRID_FOCAL: ("gamma_hat", "delta", "gamma_tv", "lambda"),
        LossKind.SYM_UNIFIED_FOCAL: ("delta", "gamma_tv", "lambda"),
        LossKind.ASYM_UNIFIED_FOCAL: ("delta", "gamma_tv", "lambda"),
        LossKind.SYM_HYBRID_FOCAL_MARGIN: ("gamma_hat", "delta", "gamma_tv", "margin", "lambda"),
        LossKind.OURS: ("gamma_hat", "delta", "gamma_tv", "margin", "lambda"),
    }[kind]
    d = params.to_dict()
    parts = [f"{k}={d[k]:g}" for k in used if d[k] is not None]
    return " ".join(parts) if parts else "-"


def compare_losses(
    base: TrainConfig | None,
    kinds_and_params,
    repeats: int = 10,
    make_dataset=None,
) -> list[ComparisonRow]:
    """Train every ``(kind, params)`` entry ``repeats`` times and summarise final validation metrics.

    Repeat ``r`` uses seed ``base.seed + r``. When ``make_dataset`` is given
    it is called with that seed to build the repeat's dataset (shared by
    every loss in the repeat); otherwise ``base.dataset`` is reused and the
    repeats are identical. A failed run is recorded in the row's ``errors``
    and excluded from the statistics instead of aborting the sweep.
    """
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    datasets = {}
    rows = []
    for entry in kinds_and_params:
        kind, params = entry[0], entry[1]
        kind = LossKind.parse(kind)
        label = entry[2] if len(entry) > 2 else kind.value
        reports, runs, errors = [], [], []
        for r in range(repeats):
            seed = base.seed + r
            if make_dataset is not None:
                if seed not in datasets:
                    datasets[seed] = tuple(make_dataset(seed))
                dataset = datasets[seed]
            else:
                dataset = base.dataset
            cfg = TrainConfig(
                dataset=dataset,
                loss_kind=kind,
                loss_params=params,
                learning_rate=base.learning_rate,
                epochs=base.epochs,
                val_split=base.val_split,
                seed=seed,
                threshold=base.threshold,
            )
            try:
                rep = train(cfg).final_metrics
            except (DivergenceError, ParameterError) as exc:
                errors.append(f"seed {seed}: {exc}")
                runs.append(None)
                continue
            reports.append(rep)
            runs.append({name: getattr(rep, name) for name in METRIC_NAMES})
        rows.append(
            ComparisonRow(
                label=label,
                kind=kind.value,
                params=params.to_dict(),
                summary=summarize(reports),
                runs=runs,
                errors=errors,
            )
        )
    return rows


def synthetic_dataset_factory(synth: SynthConfig, n_samples: int):
    """``seed -> dataset`` builder for :func:`compare_losses`."""

    def make(seed: int):
        return generate_dataset(synth.with_seed(seed), n_samples)

    return make
