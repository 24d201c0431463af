"""Central finite-difference oracle for the analytic loss gradients."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .grid import _sigmoid, as_grid, as_mask, check_same_shape
from .losses import LossKind, LossParams, batch_loss_values, loss_value_and_grad

FOREGROUND_RATES = (0.03, 0.05, 0.07)


def central_difference(func, z, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of ``func`` at ``z``, one coordinate at a time.

    ``func`` maps a stack of grids ``(B, H, W)`` to ``B`` scalars. All
    ``2 * H * W`` perturbed copies are evaluated in one call.
    """
    if not h > 0:
        raise ParameterError(f"step h must be > 0, got {h}")
    z = as_grid(z, "z")
    n = z.size
    eye = np.eye(n).reshape(n, *z.shape) * h
    plus = func(z[None] + eye)
    minus = func(z[None] - eye)
    return ((plus - minus) / (2.0 * h)).reshape(z.shape)


def finite_diff_grad(kind, z, t, p: LossParams = LossParams(), h: float = 1e-4) -> np.ndarray:
    kind = LossKind.parse(kind)
    z = as_grid(z, "z")
    t = as_mask(t, "t")
    check_same_shape(z, t, "logits and mask")
    return central_difference(lambda zb: batch_loss_values(kind, zb, t, p), z, h)


def clamp_skip_mask(z, t, p: LossParams) -> np.ndarray:
    """Pixels within ``2 * eps`` of the probability clamp, for P or the margin-shifted P."""
    lo, hi = 2.0 * p.eps, 1.0 - 2.0 * p.eps
    skip = np.zeros(z.shape, dtype=bool)
    for logits in (z, z - p.margin * t):
        prob = _sigmoid(logits)
        skip |= (prob < lo) | (prob > hi)
    return skip


@dataclass
class GradCheckReport:
    kind: str
    trials: int
    max_rel_err: float
    max_abs_err: float
    worst_trial: int
    worst_index: tuple[int, int]
    checked: int
    skipped: int
    rel_tol: float
    abs_tol: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["worst_index"] = list(self.worst_index)
        d["pass"] = d.pop("passed")
        for key in ("abs_tol", "rel_tol"):
            if math.isinf(d[key]):
                d[key] = None
        return d


def compare_gradients(analytic, numeric, rel_tol, abs_tol, skip=None):
    """Per-entry errors and a pass score; an entry passes when rel < rel_tol or abs < abs_tol.

    Returns ``(rel, abs, score)`` where ``score = min(rel/rel_tol, abs/abs_tol)``
    is below 1 exactly for passing entries. Skipped entries score 0.
    """
    abs_err = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    rel_err = np.where(scale > 0, abs_err / np.where(scale > 0, scale, 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.minimum(rel_err / rel_tol, abs_err / abs_tol)
    score = np.nan_to_num(score, nan=0.0)
    if skip is not None:
        rel_err = np.where(skip, 0.0, rel_err)
        abs_err = np.where(skip, 0.0, abs_err)
        score = np.where(skip, 0.0, score)
    return rel_err, abs_err, score


def random_instance(rng: np.random.Generator, shape):
    """Logits uniform in [-4, 4] and a Bernoulli mask at a crack-like foreground rate."""
    z = rng.uniform(-4.0, 4.0, size=shape)
    rate = FOREGROUND_RATES[rng.integers(len(FOREGROUND_RATES))]
    t = (rng.random(shape) < rate).astype(np.float64)
    return z, t


def check(
    kind,
    trials: int = 200,
    shape=(8, 8),
    rel_tol: float = 1e-5,
    abs_tol: float = 1e-8,
    seed: int = 0,
    params: LossParams = LossParams(),
    h: float = 1e-4,
) -> GradCheckReport:
    """Compare analytic and central-difference gradients on random instances."""
    kind = LossKind.parse(kind)
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    worst = (-1.0, 0, (0, 0))
    max_rel = max_abs = 0.0
    checked = skipped = 0
    for trial in range(trials):
        z, t = random_instance(rng, shape)
        analytic = loss_value_and_grad(kind, z, t, params).grad_logits
        numeric = finite_diff_grad(kind, z, t, params, h)
        skip = clamp_skip_mask(z, t, params)
        rel_err, abs_err, score = compare_gradients(analytic, numeric, rel_tol, abs_tol, skip)
        max_rel = max(max_rel, float(rel_err.max()))
        max_abs = max(max_abs, float(abs_err.max()))
        n_skip = int(skip.sum())
        skipped += n_skip
        checked += z.size - n_skip
        idx = np.unravel_index(int(np.argmax(score)), score.shape)
        if score[idx] > worst[0]:
            worst = (float(score[idx]), trial, (int(idx[0]), int(idx[1])))
    return GradCheckReport(
        kind=kind.value,
        trials=trials,
        max_rel_err=max_rel,
        max_abs_err=max_abs,
        worst_trial=worst[1],
        worst_index=worst[2],
        checked=checked,
        skipped=skipped,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        passed=bool(worst[0] < 1.0),
    )
