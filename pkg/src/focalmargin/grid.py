"""Dense 2D scalar grids.

A grid is a 2D ``float64`` numpy array of shape ``(height, width)`` with
both sides at least one pixel. A mask is a grid whose entries are exactly
0 or 1. Everything in the package takes and returns plain arrays; the
helpers here validate and normalise them.

Reductions are performed strictly sequentially in row-major order so that
results are bit-reproducible and independent of numpy's pairwise summation
blocking.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError

DEFAULT_EPS = 1e-7


def as_grid(a, name="grid") -> np.ndarray:
    """Return ``a`` as a C-contiguous float64 2D array, validating its shape."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(arr.shape, ("H", "W"), what=f"{name} and a 2D grid")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(arr.shape, ("H>=1", "W>=1"), what=f"{name} and a non-empty grid")
    return arr


def as_mask(a, name="mask") -> np.ndarray:
    arr = as_grid(a, name)
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ParameterError(f"{name} must contain only 0 and 1")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what="grids") -> None:
    if a.shape[-2:] != b.shape[-2:]:
        raise ShapeError(a.shape[-2:], b.shape[-2:], what=what)


def zip_map(a, b, f) -> np.ndarray:
    """Apply the binary function ``f`` elementwise to two same-shape grids.

    numpy ufuncs are applied directly; any other callable is treated as a
    scalar function and vectorised.
    """
    a = as_grid(a, "a")
    b = as_grid(b, "b")
    check_same_shape(a, b)
    if isinstance(f, np.ufunc):
        out = f(a, b)
    else:
        out = np.vectorize(f, otypes=[np.float64])(a, b)
    return np.asarray(out, dtype=np.float64)


def sequential_sum(x: np.ndarray) -> np.ndarray:
    """Sum over the last two axes in row-major order, one element at a time.

    Leading axes are treated as a batch. ``np.cumsum`` accumulates strictly
    left to right, which is what pins the summation order.
    """
    flat = x.reshape(x.shape[:-2] + (-1,))
    return np.cumsum(flat, axis=-1)[..., -1]


def reduce_sum(a) -> float:
    """Sum of all entries of a grid, accumulated sequentially in row-major order."""
    return float(sequential_sum(as_grid(a)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp is only ever taken of a non-positive argument
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


def sigmoid(z) -> np.ndarray:
    """Numerically stable logistic function, kept strictly inside (0, 1).

    In double precision ``1 / (1 + exp(-z))`` rounds to 1 from about
    ``z = 37`` on, so the result is clipped to the nearest representable
    values inside the open interval. The loss kernels do not use this
    clip; they carry ``P`` and ``1 - P`` separately instead.
    """
    return np.clip(_sigmoid(as_grid(z, "z")), _OPEN_LO, _OPEN_HI)


def logit(p, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Inverse of :func:`sigmoid` after clamping ``p`` to ``[eps, 1 - eps]``."""
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 0.5), got {eps!r}")
    pc = np.clip(as_grid(p, "p"), eps, 1.0 - eps)
    return np.log(pc) - np.log1p(-pc)


def logit_scalar(p: float, eps: float = DEFAULT_EPS) -> float:
    return float(logit(np.array([[p]]), eps)[0, 0])
