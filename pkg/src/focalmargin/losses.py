"""Class-imbalance losses for binary segmentation with analytic logit gradients.

Every loss is a function of the logits ``z`` and a 0/1 mask ``t`` and
returns a :class:`LossOutput` holding the scalar value and ``dloss/dz``.
Probabilities are ``P = sigmoid(z)``; the foreground (crack) class is the
rare class.

Two families are implemented:

* entropy losses (BCE, focal, asymmetric focal, large margin, focal
  margin), normalised by the pixel count ``N``;
* region losses (Dice, squared Dice, Tversky, focal Tversky), computed
  over the whole grid with no ``1/N`` factor.

Compound kinds add one loss of each family. A margin ``m`` is applied in
logit space to foreground pixels only: ``P_hat = sigmoid(z - m)`` where
``t == 1``. Logs are always taken of probabilities clamped to
``[eps, 1 - eps]``; inside the clamped region the log is treated as a
constant, so its gradient contribution there is zero.

Internally the kernels accept logits with arbitrary leading batch axes,
``(..., H, W)``, against a single ``(H, W)`` mask, and reduce over the
last two axes only. The public functions take plain 2D grids.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import FocalMarginError, ParameterError
from .grid import _sigmoid, as_grid, as_mask, check_same_shape, sequential_sum


class LossKind(str, enum.Enum):
    BCE = "BCE"
    DICE_SORENSEN = "DICE_SORENSEN"
    DICE_SQUARED = "DICE_SQUARED"
    BCEDICE = "BCEDICE"
    FOCAL = "FOCAL"
    ASYM_FOCAL = "ASYM_FOCAL"
    ASYM_LARGE_MARGIN = "ASYM_LARGE_MARGIN"
    TVERSKY = "TVERSKY"
    FOCAL_TVERSKY = "FOCAL_TVERSKY"
    ASYM_FOCAL_TVERSKY = "ASYM_FOCAL_TVERSKY"
    SYM_FOCAL_MARGIN = "SYM_FOCAL_MARGIN"
    ASYM_FOCAL_MARGIN = "ASYM_FOCAL_MARGIN"
    HYBRID_FOCAL = "HYBRID_FOCAL"
    SYM_UNIFIED_FOCAL = "SYM_UNIFIED_FOCAL"
    ASYM_UNIFIED_FOCAL = "ASYM_UNIFIED_FOCAL"
    SYM_HYBRID_FOCAL_MARGIN = "SYM_HYBRID_FOCAL_MARGIN"
    OURS = "OURS"

    @classmethod
    def parse(cls, name: "str | LossKind") -> "LossKind":
        """Look up a kind by name, ignoring case and surrounding whitespace."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            valid = ", ".join(k.value for k in cls)
            raise ParameterError(f"unknown loss kind {name!r}; expected one of: {valid}") from None

    def __str__(self) -> str:
        return self.value


COMPOUND_KINDS = frozenset(
    {
        LossKind.BCEDICE,
        LossKind.HYBRID_FOCAL,
        LossKind.SYM_UNIFIED_FOCAL,
        LossKind.ASYM_UNIFIED_FOCAL,
        LossKind.SYM_HYBRID_FOCAL_MARGIN,
        LossKind.OURS,
    }
)

MARGIN_KINDS = frozenset(
    {
        LossKind.ASYM_LARGE_MARGIN,
        LossKind.ASYM_FOCAL_MARGIN,
        LossKind.SYM_FOCAL_MARGIN,
        LossKind.SYM_HYBRID_FOCAL_MARGIN,
        LossKind.OURS,
    }
)


@dataclass(frozen=True)
class LossParams:
    """Hyperparameters shared by every loss kind.

    Attributes:
        gamma_hat: Focal exponent on the entropy terms (background
            suppression in the asymmetric kinds).
        delta: Tversky class weight. False negatives are weighted by
            ``delta`` and false positives by ``1 - delta``.
        gamma_tv: Exponent of the focal Tversky term; also the shared
            exponent of the unified focal kinds.
        margin: Logit margin subtracted from foreground pixels.
        lam: Mixing weight of compound kinds. ``None`` (the default) adds
            the two components with unit weights; a number in ``[0, 1]``
            gives ``lam * entropy + (1 - lam) * region``. Serialised as
            ``"lambda"``.
        smooth: Smoothing term of the Dice and Tversky ratios.
        eps: Probability clamp applied before every log.
    """

    gamma_hat: float = 2.0
    delta: float = 0.7
    gamma_tv: float = 0.75
    margin: float = 0.0
    lam: float | None = None
    smooth: float = 1.0
    eps: float = 1e-7

    def __post_init__(self):
        for name in ("gamma_hat", "delta", "gamma_tv", "margin", "smooth", "eps"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.lam is not None:
            if isinstance(self.lam, bool) or not isinstance(self.lam, (int, float)):
                raise ParameterError(f"lambda must be a number or null, got {self.lam!r}")
            object.__setattr__(self, "lam", float(self.lam))
            if not 0.0 <= self.lam <= 1.0:
                raise ParameterError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.gamma_hat < 0:
            raise ParameterError(f"gamma_hat must be >= 0, got {self.gamma_hat}")
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError(f"delta must lie in [0, 1], got {self.delta}")
        if self.gamma_tv <= 0:
            raise ParameterError(f"gamma_tv must be > 0, got {self.gamma_tv}")
        if self.margin < 0:
            raise ParameterError(f"margin must be >= 0, got {self.margin}")
        if self.smooth < 0:
            raise ParameterError(f"smooth must be >= 0, got {self.smooth}")
        if not 0.0 < self.eps < 0.5:
            raise ParameterError(f"eps must lie in (0, 0.5), got {self.eps}")

    @property
    def alpha(self) -> float:
        """False-negative weight of the Tversky index."""
        return self.delta

    @property
    def beta(self) -> float:
        """False-positive weight of the Tversky index."""
        return 1.0 - self.delta

    def replace(self, **changes) -> "LossParams":
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "gamma_hat": self.gamma_hat,
            "delta": self.delta,
            "gamma_tv": self.gamma_tv,
            "margin": self.margin,
            "lambda": self.lam,
            "smooth": self.smooth,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LossParams":
        if not isinstance(data, dict):
            raise ParameterError(f"loss params must be a JSON object, got {type(data).__name__}")
        allowed = set(cls().to_dict())
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ParameterError(f"unknown loss parameter field(s): {', '.join(unknown)}")
        kw = dict(data)
        if "lambda" in kw:
            kw["lam"] = kw.pop("lambda")
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LossParams":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"invalid loss params JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class LossOutput:
    value: float
    grad_logits: np.ndarray


class _Out(NamedTuple):
    # batched value (...,) and gradient (..., H, W)
    value: np.ndarray
    grad: np.ndarray


# --------------------------------------------------------------------------
# shared pieces


def _num_pixels(t: np.ndarray) -> int:
    return t.shape[-2] * t.shape[-1]


def _probs(z):
    return _sigmoid(z), _sigmoid(-z)


def _inside(p, eps):
    return ((p >= eps) & (p <= 1.0 - eps)).astype(np.float64)


def _clamped_log(p, eps):
    return np.log(np.clip(p, eps, 1.0 - eps))


def margin_shift(z, t, m: float) -> np.ndarray:
    """Foreground-regularised prediction: ``sigmoid(z - m)`` on foreground, ``sigmoid(z)`` elsewhere."""
    z = as_grid(z, "z")
    t = as_mask(t, "t")
    check_same_shape(z, t, "logits and mask")
    if m < 0:
        raise ParameterError(f"margin must be >= 0, got {m}")
    return _sigmoid(z - m * t)


# --------------------------------------------------------------------------
# entropy kernels


def _bce(z, t, p: LossParams) -> _Out:
    n = _num_pixels(t)
    P, Q = _probs(z)
    inside = _inside(P, p.eps)
    pix = -(t * _clamped_log(P, p.eps) + (1.0 - t) * _clamped_log(Q, p.eps))
    # (P - t) written as -t*Q + (1-t)*P: no cancellation near P = 1, and the
    # same floating-point operations as the focal margin kernel at m = 0, gamma_hat = 0
    grad = -t * Q * inside + (1.0 - t) * P * inside
    return _Out(sequential_sum(pix) / n, grad / n)


def _asym_focal(z, t, p: LossParams) -> _Out:
    n = _num_pixels(t)
    g = p.gamma_hat
    P, Q = _probs(z)
    inside = _inside(P, p.eps)
    log_q = _clamped_log(Q, p.eps)
    bg_weight = P**g
    pix = -(t * _clamped_log(P, p.eps) + bg_weight * (1.0 - t) * log_q)
    # d/dz P**g = g * P**g * Q ; d/dz log(1-P) = -P
    grad = -t * Q * inside - (1.0 - t) * bg_weight * (g * Q * log_q - P * inside)
    return _Out(sequential_sum(pix) / n, grad / n)


def _asym_large_margin(z, t, p: LossParams) -> _Out:
    n = _num_pixels(t)
    P, Q = _probs(z)
    u = z - p.margin * t
    Pu, Qu = _probs(u)
    pix = -(t * _clamped_log(Pu, p.eps) + (1.0 - t) * _clamped_log(Q, p.eps))
    grad = -t * Qu * _inside(Pu, p.eps) + (1.0 - t) * P * _inside(P, p.eps)
    return _Out(sequential_sum(pix) / n, grad / n)


class _EntropyTerms(NamedTuple):
    total: np.ndarray
    fg: np.ndarray
    bg: np.ndarray
    grad: np.ndarray


def _focal_margin_terms(
    z, t, *, fg_gamma, bg_gamma, margin, eps, fg_weight=1.0, bg_weight=1.0
) -> _EntropyTerms:
    """General focal-margin entropy kernel, split into foreground and background sums.

    Per pixel::

        -fg_weight * t * (1-P)**fg_gamma * log(P_hat)
        -bg_weight * (1-t) * P**bg_gamma * log(1-P)

    with ``P_hat = sigmoid(z - margin)`` on the foreground. The modulating
    factors use the unshifted ``P``.
    """
    n = _num_pixels(t)
    P, Q = _probs(z)
    u = z - margin * t
    Pu, Qu = _probs(u)
    log_pu = _clamped_log(Pu, eps)
    log_q = _clamped_log(Q, eps)
    fg_mod = Q**fg_gamma
    bg_mod = P**bg_gamma

    fg_pix = -fg_weight * t * fg_mod * log_pu
    bg_pix = -bg_weight * (1.0 - t) * bg_mod * log_q
    # d/dz (1-P)**g = -g * P * (1-P)**g ; d/dz log sigmoid(z-m) = 1 - sigmoid(z-m)
    grad = -fg_weight * t * fg_mod * (Qu * _inside(Pu, eps) - fg_gamma * P * log_pu) - (
        bg_weight * (1.0 - t) * bg_mod * (bg_gamma * Q * log_q - P * _inside(P, eps))
    )
    return _EntropyTerms(
        sequential_sum(fg_pix + bg_pix) / n,
        sequential_sum(fg_pix) / n,
        sequential_sum(bg_pix) / n,
        grad / n,
    )


def _entropy_config(kind: LossKind, p: LossParams) -> dict:
    """Arguments of :func:`_focal_margin_terms` realising an entropy kind."""
    g, m = p.gamma_hat, p.margin
    configs = {
        LossKind.BCE: dict(fg_gamma=0.0, bg_gamma=0.0, margin=0.0),
        LossKind.FOCAL: dict(fg_gamma=g, bg_gamma=g, margin=0.0),
        LossKind.ASYM_FOCAL: dict(fg_gamma=0.0, bg_gamma=g, margin=0.0),
        LossKind.ASYM_LARGE_MARGIN: dict(fg_gamma=0.0, bg_gamma=0.0, margin=m),
        LossKind.ASYM_FOCAL_MARGIN: dict(fg_gamma=0.0, bg_gamma=g, margin=m),
        LossKind.SYM_FOCAL_MARGIN: dict(fg_gamma=g, bg_gamma=g, margin=m),
    }
    # unified focal: a single delta weights the classes, a single gamma shapes both parts
    gu = p.gamma_tv
    configs[LossKind.SYM_UNIFIED_FOCAL] = dict(
        fg_gamma=1.0 - gu, bg_gamma=1.0 - gu, margin=0.0, fg_weight=p.delta, bg_weight=1.0 - p.delta
    )
    configs[LossKind.ASYM_UNIFIED_FOCAL] = dict(
        fg_gamma=0.0, bg_gamma=gu, margin=0.0, fg_weight=p.delta, bg_weight=1.0 - p.delta
    )
    return configs[kind]


def _general_entropy(kind: LossKind) -> Callable[[np.ndarray, np.ndarray, LossParams], _Out]:
    def kernel(z, t, p):
        cfg = _entropy_config(kind, p)
        if cfg["fg_gamma"] < 0:
            raise ParameterError(f"{kind} requires gamma_tv <= 1, got {p.gamma_tv}")
        terms = _focal_margin_terms(z, t, eps=p.eps, **cfg)
        return _Out(terms.total, terms.grad)

    return kernel


# --------------------------------------------------------------------------
# region (overlap) kernels; these work on probabilities and return d/dP


def _tversky_complement(P, t, delta, smooth):
    """``1 - TI`` and its derivative with respect to ``P``.

    The smoothing enters as ``smooth / 2`` so that ``delta = 0.5`` gives
    exactly the Dice coefficient with smoothing ``smooth``. ``1 - TI`` is
    formed as ``(a*FN + b*FP) / den`` rather than by subtraction, which
    keeps it non-negative and accurate near a perfect prediction.
    """
    a, b = delta, 1.0 - delta
    s = 0.5 * smooth
    tp = sequential_sum(t * P)
    fn = sequential_sum(t * (1.0 - P))
    fp = sequential_sum((1.0 - t) * P)
    miss = a * fn + b * fp
    den = tp + miss + s
    safe = np.where(den > 0, den, 1.0)
    value = np.where(den > 0, miss / safe, 0.0)

    d_miss = -a * t + b * (1.0 - t)
    d_den = t + d_miss
    safe_b = safe[..., None, None]
    grad = (d_miss * safe_b - miss[..., None, None] * d_den) / (safe_b * safe_b)
    grad = np.where((den > 0)[..., None, None], grad, 0.0)
    return value, grad


def _power(value, grad, exponent):
    """``value**exponent`` and its chain-rule gradient; the gradient is 0 where value is 0."""
    out = value**exponent
    pos = value > 0
    scale = np.where(pos, exponent * np.where(pos, value, 1.0) ** (exponent - 1.0), 0.0)
    return out, grad * scale[..., None, None]


def _dice_complement(P, t, smooth, squared):
    inter = sequential_sum(t * P)
    if squared:
        den = sequential_sum(t * t) + sequential_sum(P * P) + smooth
        d_den = 2.0 * P
    else:
        den = sequential_sum(t) + sequential_sum(P) + smooth
        d_den = np.ones_like(P)
    num = 2.0 * inter + smooth
    safe = np.where(den > 0, den, 1.0)
    coef = np.where(den > 0, num / safe, 1.0)
    safe_b = safe[..., None, None]
    d_coef = (2.0 * t * safe_b - num[..., None, None] * d_den) / (safe_b * safe_b)
    d_coef = np.where((den > 0)[..., None, None], d_coef, 0.0)
    return 1.0 - coef, -d_coef


def _region_kernel(fn):
    """Lift a probability-space region loss ``fn(P, t, params)`` to logits."""

    def kernel(z, t, p):
        P, Q = _probs(z)
        value, d_p = fn(P, t, p)
        return _Out(value, d_p * (P * Q))

    return kernel


def _tversky_loss(P, t, p):
    return _tversky_complement(P, t, p.delta, p.smooth)


def _focal_tversky_loss(P, t, p):
    return _power(*_tversky_complement(P, t, p.delta, p.smooth), p.gamma_tv)


def _asym_focal_tversky_loss(P, t, p):
    # binary case: only the rare (foreground) term survives
    exponent = 1.0 - p.gamma_tv
    if exponent < 0:
        raise ParameterError(f"asymmetric focal Tversky requires gamma_tv <= 1, got {p.gamma_tv}")
    return _power(*_tversky_complement(P, t, p.delta, p.smooth), exponent)


def _dice_sorensen_loss(P, t, p):
    return _dice_complement(P, t, p.smooth, squared=False)


def _dice_squared_loss(P, t, p):
    return _dice_complement(P, t, p.smooth, squared=True)


# --------------------------------------------------------------------------
# compounds


_COMPONENTS = {
    LossKind.BCEDICE: (LossKind.BCE, LossKind.DICE_SORENSEN),
    LossKind.HYBRID_FOCAL: (LossKind.ASYM_FOCAL, LossKind.FOCAL_TVERSKY),
    LossKind.OURS: (LossKind.ASYM_FOCAL_MARGIN, LossKind.FOCAL_TVERSKY),
    LossKind.SYM_HYBRID_FOCAL_MARGIN: (LossKind.SYM_FOCAL_MARGIN, LossKind.FOCAL_TVERSKY),
    LossKind.SYM_UNIFIED_FOCAL: (LossKind.SYM_UNIFIED_FOCAL, LossKind.FOCAL_TVERSKY),
    LossKind.ASYM_UNIFIED_FOCAL: (LossKind.ASYM_UNIFIED_FOCAL, LossKind.ASYM_FOCAL_TVERSKY),
}


def compound_weights(p: LossParams) -> tuple[float, float]:
    if p.lam is None:
        return 1.0, 1.0
    return p.lam, 1.0 - p.lam


def _entropy_component(kind: LossKind):
    entropy_kind, _ = _COMPONENTS[kind]
    if entropy_kind in (LossKind.SYM_UNIFIED_FOCAL, LossKind.ASYM_UNIFIED_FOCAL):
        return _general_entropy(entropy_kind)
    return _KERNELS[entropy_kind]


def _compound_kernel(kind: LossKind):
    def kernel(z, t, p):
        _, region_kind = _COMPONENTS[kind]
        w_e, w_r = compound_weights(p)
        e = _entropy_component(kind)(z, t, p)
        r = _KERNELS[region_kind](z, t, p)
        return _Out(w_e * e.value + w_r * r.value, w_e * e.grad + w_r * r.grad)

    return kernel


_KERNELS: dict[LossKind, Callable[[np.ndarray, np.ndarray, LossParams], _Out]] = {
    LossKind.BCE: _bce,
    LossKind.ASYM_FOCAL: _asym_focal,
    LossKind.ASYM_LARGE_MARGIN: _asym_large_margin,
    LossKind.FOCAL: _general_entropy(LossKind.FOCAL),
    LossKind.ASYM_FOCAL_MARGIN: _general_entropy(LossKind.ASYM_FOCAL_MARGIN),
    LossKind.SYM_FOCAL_MARGIN: _general_entropy(LossKind.SYM_FOCAL_MARGIN),
    LossKind.DICE_SORENSEN: _region_kernel(_dice_sorensen_loss),
    LossKind.DICE_SQUARED: _region_kernel(_dice_squared_loss),
    LossKind.TVERSKY: _region_kernel(_tversky_loss),
    LossKind.FOCAL_TVERSKY: _region_kernel(_focal_tversky_loss),
    LossKind.ASYM_FOCAL_TVERSKY: _region_kernel(_asym_focal_tversky_loss),
}
for _k in COMPOUND_KINDS:
    _KERNELS[_k] = _compound_kernel(_k)
del _k

assert set(_KERNELS) == set(LossKind)


# --------------------------------------------------------------------------
# public API


def _prepare(z, t):
    z = as_grid(z, "z")
    t = as_mask(t, "t")
    check_same_shape(z, t, "logits and mask")
    return z, t


def _run(kind: LossKind, z, t, p: LossParams) -> LossOutput:
    z, t = _prepare(z, t)
    out = _KERNELS[kind](z, t, p)
    return LossOutput(float(out.value), out.grad)


def bce(z, t, p: LossParams = LossParams()) -> LossOutput:
    """Mean binary cross-entropy; gradient ``(P - t) / N`` outside the clamp."""
    return _run(LossKind.BCE, z, t, p)


def asym_focal(z, t, p: LossParams = LossParams()) -> LossOutput:
    """Asymmetric focal loss: plain log-loss on the foreground, ``P**gamma_hat`` attenuation on the background."""
    return _run(LossKind.ASYM_FOCAL, z, t, p)


def asym_large_margin(z, t, p: LossParams = LossParams()) -> LossOutput:
    return _run(LossKind.ASYM_LARGE_MARGIN, z, t, p)


def asym_focal_margin(z, t, p: LossParams = LossParams()) -> LossOutput:
    """Asymmetric focal margin loss.

    The foreground is scored with the margin-shifted prediction, the
    background with focal attenuation. ``margin=0`` gives the asymmetric
    focal loss, ``gamma_hat=0`` the asymmetric large margin loss and both
    zero gives BCE.
    """
    return _run(LossKind.ASYM_FOCAL_MARGIN, z, t, p)


def sym_focal_margin(z, t, p: LossParams = LossParams()) -> LossOutput:
    """Symmetric focal margin loss: focal attenuation on both classes, margin on the foreground."""
    return _run(LossKind.SYM_FOCAL_MARGIN, z, t, p)


def focal(z, t, p: LossParams = LossParams()) -> LossOutput:
    return _run(LossKind.FOCAL, z, t, p)


def _prepare_probs(pr, t):
    pr = as_grid(pr, "pr")
    t = as_mask(t, "t")
    check_same_shape(pr, t, "predictions and mask")
    if np.any(pr < 0) or np.any(pr > 1):
        raise ParameterError("predictions must lie in [0, 1]")
    return pr, t


def tversky_index(pr, t, p: LossParams = LossParams()) -> float:
    pr, t = _prepare_probs(pr, t)
    a, b, s = p.alpha, p.beta, 0.5 * p.smooth
    tp = sequential_sum(t * pr)
    den = tp + a * sequential_sum(t * (1.0 - pr)) + b * sequential_sum((1.0 - t) * pr) + s
    if den == 0:
        return 1.0
    return float((tp + s) / den)


def dice_coefficient(pr, t, smooth: float = 1.0) -> float:
    """Smoothed Sørensen-Dice coefficient ``(2*sum(tP) + s) / (sum(t) + sum(P) + s)``."""
    pr, t = _prepare_probs(pr, t)
    den = sequential_sum(t) + sequential_sum(pr) + smooth
    if den == 0:
        return 1.0
    return float((2.0 * sequential_sum(t * pr) + smooth) / den)


def focal_tversky(pr, t, p: LossParams = LossParams()) -> float:
    """``(1 - TI) ** gamma_tv`` on probabilities."""
    pr, t = _prepare_probs(pr, t)
    return float(_focal_tversky_loss(pr, t, p)[0])


def dice_losses(pr, t, p: LossParams = LossParams(), squared: bool = False) -> float:
    """Dice loss on probabilities; ``squared`` selects the squared-denominator variant."""
    pr, t = _prepare_probs(pr, t)
    return float(_dice_complement(pr, t, p.smooth, squared)[0])


def compound(kind, z, t, p: LossParams = LossParams()) -> LossOutput:
    """Weighted sum of an entropy loss and a region loss.

    ===========================  ============================  ===========================
    kind                         entropy part                  region part
    ===========================  ============================  ===========================
    BCEDICE                      BCE                           Dice
    HYBRID_FOCAL                 asymmetric focal              focal Tversky
    OURS                         asymmetric focal margin       focal Tversky
    SYM_HYBRID_FOCAL_MARGIN      symmetric focal margin        focal Tversky
    SYM_UNIFIED_FOCAL            delta-weighted focal          focal Tversky
    ASYM_UNIFIED_FOCAL           delta-weighted asym. focal    rare-class focal Tversky
    ===========================  ============================  ===========================

    Weights are ``(1, 1)`` when ``p.lam`` is None and ``(lam, 1 - lam)``
    otherwise.
    """
    kind = LossKind.parse(kind)
    if kind not in COMPOUND_KINDS:
        raise FocalMarginError(f"{kind} is not a compound loss kind")
    return _run(kind, z, t, p)


def loss_value_and_grad(kind, z, t, p: LossParams = LossParams()) -> LossOutput:
    return _run(LossKind.parse(kind), z, t, p)


def batch_loss_values(kind, z_batch, t, p: LossParams = LossParams()) -> np.ndarray:
    """Loss values for a stack of logit grids ``(..., H, W)`` sharing one mask."""
    kind = LossKind.parse(kind)
    z_batch = np.asarray(z_batch, dtype=np.float64)
    t = as_mask(t, "t")
    check_same_shape(z_batch, t, "logits and mask")
    return _KERNELS[kind](z_batch, t, p).value


class EntropySplit(NamedTuple):
    value: float
    foreground: float
    background: float
    region: float


def split_terms(kind, z, t, p: LossParams = LossParams()) -> EntropySplit:
    """Decompose a loss into its foreground entropy, background entropy and region parts.

    Defined for the entropy kinds and for compounds (whose region part is
    reported separately, already weighted). Pure region kinds have no
    entropy split and raise.
    """
    kind = LossKind.parse(kind)
    z, t = _prepare(z, t)
    if kind in COMPOUND_KINDS:
        entropy_kind, region_kind = _COMPONENTS[kind]
        w_e, w_r = compound_weights(p)
        region = w_r * float(_KERNELS[region_kind](z, t, p).value)
    else:
        entropy_kind, w_e, region = kind, 1.0, 0.0
    try:
        cfg = _entropy_config(entropy_kind, p)
    except KeyError:
        raise FocalMarginError(f"{kind} has no foreground/background entropy split") from None
    terms = _focal_margin_terms(z, t, eps=p.eps, **cfg)
    fg, bg = w_e * float(terms.fg), w_e * float(terms.bg)
    value = float(_KERNELS[kind](z, t, p).value)
    return EntropySplit(value, fg, bg, region)
