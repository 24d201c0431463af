"""Reduction-identity audit.

Each edge pairs a loss under special parameters with the loss it must
reduce to (focal margin -> focal / large margin / BCE, compound endpoints,
Tversky at delta=0.5 -> Dice, ...). Both sides are evaluated on random
instances and compared by value and by every gradient entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .gradcheck import random_instance
from .losses import (
    LossKind,
    LossOutput,
    LossParams,
    dice_coefficient,
    loss_value_and_grad,
    tversky_index,
)
from .grid import sigmoid

DEFAULT_TOL = 1e-12


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
    return float(np.max(rel))


def output_discrepancy(x: LossOutput, y: LossOutput) -> float:
    """Largest relative difference over the value and all gradient entries."""
    return max(_rel(x.value, y.value), _rel(x.grad_logits, y.grad_logits))


def _pair(kind_a, changes_a, kind_b, changes_b):
    def run(z, t, p):
        a = loss_value_and_grad(kind_a, z, t, p.replace(**changes_a))
        b = loss_value_and_grad(kind_b, z, t, p.replace(**changes_b))
        return output_discrepancy(a, b)

    return run


def _sum_of(kind, parts):
    def run(z, t, p):
        a = loss_value_and_grad(kind, z, t, p)
        outs = [loss_value_and_grad(k, z, t, p) for k in parts]
        b = LossOutput(sum(o.value for o in outs), sum(o.grad_logits for o in outs))
        return output_discrepancy(a, b)

    return run


def _tversky_dice_index(z, t, p):
    pr = sigmoid(z)
    return _rel(tversky_index(pr, t, p.replace(delta=0.5)), dice_coefficient(pr, t, p.smooth))


K = LossKind

EDGES = {
    "aFM(m=0) == aF": _pair(K.ASYM_FOCAL_MARGIN, {"margin": 0.0}, K.ASYM_FOCAL, {}),
    "aFM(gamma_hat=0) == aLM": _pair(K.ASYM_FOCAL_MARGIN, {"gamma_hat": 0.0}, K.ASYM_LARGE_MARGIN, {}),
    "aFM(m=0, gamma_hat=0) == BCE": _pair(
        K.ASYM_FOCAL_MARGIN, {"margin": 0.0, "gamma_hat": 0.0}, K.BCE, {}
    ),
    "aLM(m=0) == BCE": _pair(K.ASYM_LARGE_MARGIN, {"margin": 0.0}, K.BCE, {}),
    "FM(m=0) == FOCAL": _pair(K.SYM_FOCAL_MARGIN, {"margin": 0.0}, K.FOCAL, {}),
    "FM(m=0, gamma_hat=0) == BCE": _pair(
        K.SYM_FOCAL_MARGIN, {"margin": 0.0, "gamma_hat": 0.0}, K.BCE, {}
    ),
    "OURS(m=0) == HYBRID_FOCAL": _pair(K.OURS, {"margin": 0.0}, K.HYBRID_FOCAL, {}),
    "HYBRID_FOCAL(lambda=1) == aF": _pair(K.HYBRID_FOCAL, {"lam": 1.0}, K.ASYM_FOCAL, {}),
    "HYBRID_FOCAL(lambda=0) == FT": _pair(K.HYBRID_FOCAL, {"lam": 0.0}, K.FOCAL_TVERSKY, {}),
    "sHFM(lambda=1) == FM": _pair(K.SYM_HYBRID_FOCAL_MARGIN, {"lam": 1.0}, K.SYM_FOCAL_MARGIN, {}),
    "sHFM(lambda=0) == FT": _pair(K.SYM_HYBRID_FOCAL_MARGIN, {"lam": 0.0}, K.FOCAL_TVERSKY, {}),
    "OURS(lambda=1) == aFM": _pair(K.OURS, {"lam": 1.0}, K.ASYM_FOCAL_MARGIN, {}),
    "BCEDICE == BCE + DICE": _sum_of(K.BCEDICE, (K.BCE, K.DICE_SORENSEN)),
    "OURS == aFM + FT": _sum_of(K.OURS, (K.ASYM_FOCAL_MARGIN, K.FOCAL_TVERSKY)),
    "FT(gamma_tv=1) == TVERSKY": _pair(K.FOCAL_TVERSKY, {"gamma_tv": 1.0}, K.TVERSKY, {}),
    "TVERSKY(delta=0.5) == DICE": _pair(K.TVERSKY, {"delta": 0.5}, K.DICE_SORENSEN, {}),
    "TI(delta=0.5) == Dice coefficient": _tversky_dice_index,
}


@dataclass
class EdgeResult:
    edge: str
    max_rel_err: float
    passed: bool

    def to_dict(self) -> dict:
        return {"edge": self.edge, "max_rel_err": self.max_rel_err, "pass": self.passed}


@dataclass
class AuditReport:
    seed: int
    trials: int
    shape: tuple[int, int]
    tol: float
    edges: list[EdgeResult]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.edges)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "shape": list(self.shape),
            "tol": self.tol,
            "pass": self.passed,
            "edges": [e.to_dict() for e in self.edges],
        }


def random_params(rng: np.random.Generator) -> LossParams:
    return LossParams(
        gamma_hat=float(rng.uniform(0.0, 3.0)),
        delta=float(rng.uniform(0.0, 1.0)),
        gamma_tv=float(rng.uniform(0.25, 1.0)),
        margin=float(rng.uniform(0.0, 2.0)),
    )


def run_audit(
    seed: int = 0, trials: int = 500, shape=(8, 8), tol: float = DEFAULT_TOL, edges=None
) -> AuditReport:
    """Check every reduction edge on ``trials`` random instances.

    Every tenth instance uses an all-background mask. Loss parameters not
    pinned by an edge are drawn at random per instance.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    names = list(EDGES) if edges is None else list(edges)
    worst = dict.fromkeys(names, 0.0)
    rng = np.random.default_rng(seed)
    for i in range(trials):
        z, t = random_instance(rng, shape)
        if i % 10 == 9:
            t = np.zeros(shape)
        p = random_params(rng)
        for name in names:
            worst[name] = max(worst[name], EDGES[name](z, t, p))
    return AuditReport(
        seed=seed,
        trials=trials,
        shape=tuple(shape),
        tol=tol,
        edges=[EdgeResult(n, worst[n], worst[n] <= tol) for n in names],
    )
