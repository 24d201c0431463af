"""Synthetic crack-like masks and noisy feature maps.

Masks are built from random-walk polylines with a bounded turning angle,
stamped with a square brush of ``stroke_width`` pixels. Drawing stops as
soon as the running foreground count reaches the target, so the achieved
ratio overshoots by at most one stamp. Feature channel ``k`` (1-based) is
the mask box-blurred with radius ``k - 1`` plus Gaussian noise.

All randomness comes from :class:`~focalmargin.rng.XorShift64Star`, so a
``(seed, config)`` pair fixes every output bit.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .errors import FormatError, GenerationError, ParameterError
from .grid import as_mask
from .rng import XorShift64Star, derive_seed

MAX_ATTEMPTS = 50
RATIO_TOLERANCE = 0.30
# per-step heading change is uniform in [-MAX_TURN, MAX_TURN] radians
MAX_TURN = 0.35
FEATURE_STREAM = 1 << 32

# foreground ratios of the three crack datasets used as presets
DATASET_RATIOS = {"deepcrack": 0.0505, "crack500": 0.073, "panelcrack": 0.0315}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    size: tuple[int, int] = (96, 96)
    target_ratio: float = 0.05
    stroke_width: int = 1
    n_curves: int = 3
    feature_noise: float = 0.25
    feature_channels: int = 2

    def __post_init__(self):
        h, w = self.size
        object.__setattr__(self, "size", (int(h), int(w)))
        if self.size[0] < 1 or self.size[1] < 1:
            raise ParameterError(f"size must be positive, got {self.size}")
        if not 0.0 < self.target_ratio <= 0.2:
            raise ParameterError(f"target_ratio must lie in (0, 0.2], got {self.target_ratio}")
        if self.stroke_width < 1:
            raise ParameterError(f"stroke_width must be >= 1, got {self.stroke_width}")
        if self.n_curves < 1:
            raise ParameterError(f"n_curves must be >= 1, got {self.n_curves}")
        if self.feature_noise < 0:
            raise ParameterError(f"feature_noise must be >= 0, got {self.feature_noise}")
        if self.feature_channels < 1:
            raise ParameterError(f"feature_channels must be >= 1, got {self.feature_channels}")

    def with_seed(self, seed: int) -> "SynthConfig":
        return SynthConfig(**{**asdict(self), "seed": seed})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["size"] = list(self.size)
        return d


@dataclass(frozen=True)
class SynthSample:
    mask: np.ndarray
    features: tuple[np.ndarray, ...]
    seed: int | None = None

    @property
    def achieved_ratio(self) -> float:
        return float(self.mask.mean())

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape


def _draw_attempt(cfg: SynthConfig, rng: XorShift64Star) -> tuple[np.ndarray, int]:
    h, w = cfg.size
    mask = np.zeros((h, w), dtype=bool)
    target = cfg.target_ratio * h * w
    lo = -((cfg.stroke_width - 1) // 2)
    hi = lo + cfg.stroke_width
    count = 0

    def stamp(x, y):
        nonlocal count
        cx, cy = math.floor(x + 0.5), math.floor(y + 0.5)
        block = mask[max(cy + lo, 0) : min(cy + hi, h), max(cx + lo, 0) : min(cx + hi, w)]
        count += block.size - int(np.count_nonzero(block))
        block[...] = True

    max_steps = 8 * (h + w) + int(4 * target)
    for k in range(cfg.n_curves):
        budget = target * (k + 1) / cfg.n_curves
        x = rng.uniform() * (w - 1)
        y = rng.uniform() * (h - 1)
        heading = rng.uniform() * 2.0 * math.pi
        stamp(x, y)
        steps = 0
        while count < budget and steps < max_steps:
            heading += (2.0 * rng.uniform() - 1.0) * MAX_TURN
            nx, ny = x + math.cos(heading), y + math.sin(heading)
            # reflect off the borders
            if not 0.0 <= nx <= w - 1:
                heading = math.pi - heading
                nx = x + math.cos(heading)
            if not 0.0 <= ny <= h - 1:
                heading = -heading
                ny = y + math.sin(heading)
            x, y = min(max(nx, 0.0), w - 1.0), min(max(ny, 0.0), h - 1.0)
            stamp(x, y)
            steps += 1
    return mask.astype(np.float64), count


def generate_mask(cfg: SynthConfig) -> np.ndarray:
    """Crack-like binary mask whose foreground fraction is within 30% of the target."""
    h, w = cfg.size
    achieved = []
    for attempt in range(MAX_ATTEMPTS):
        mask, count = _draw_attempt(cfg, XorShift64Star(cfg.seed, stream=attempt))
        ratio = count / (h * w)
        if abs(ratio - cfg.target_ratio) <= RATIO_TOLERANCE * cfg.target_ratio:
            return mask
        achieved.append(ratio)
    raise GenerationError(
        f"could not reach foreground ratio {cfg.target_ratio} within +/-{RATIO_TOLERANCE:.0%} "
        f"after {MAX_ATTEMPTS} attempts (last {achieved[-1]:.4f}); try a larger size, "
        "a smaller stroke_width or a different target_ratio"
    )


def box_blur(grid: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the ``(2r+1)^2`` window clipped to the image (edge-normalised)."""
    if radius == 0:
        return grid.copy()
    h, w = grid.shape
    integral = np.zeros((h + 1, w + 1))
    integral[1:, 1:] = grid.cumsum(0).cumsum(1)
    rows = np.arange(h)
    cols = np.arange(w)
    r0, r1 = np.clip(rows - radius, 0, h), np.clip(rows + radius + 1, 0, h)
    c0, c1 = np.clip(cols - radius, 0, w), np.clip(cols + radius + 1, 0, w)
    total = (
        integral[r1][:, c1] - integral[r0][:, c1] - integral[r1][:, c0] + integral[r0][:, c0]
    )
    area = np.outer(r1 - r0, c1 - c0)
    return total / area


def generate_features(mask, cfg: SynthConfig) -> SynthSample:
    mask = as_mask(mask)
    h, w = mask.shape
    noise = None
    if cfg.feature_noise > 0:
        rng = XorShift64Star(cfg.seed, stream=FEATURE_STREAM)
        noise = rng.normals(cfg.feature_channels * h * w).reshape(cfg.feature_channels, h, w)
    channels = []
    for k in range(cfg.feature_channels):
        f = box_blur(mask, k)
        if noise is not None:
            f = f + cfg.feature_noise * noise[k]
        channels.append(f)
    return SynthSample(mask=mask, features=tuple(channels), seed=cfg.seed)


def generate_sample(cfg: SynthConfig) -> SynthSample:
    return generate_features(generate_mask(cfg), cfg)


def sample_seed(seed: int, index: int) -> int:
    return derive_seed(seed, index)


def generate_dataset(cfg: SynthConfig, n_samples: int) -> list[SynthSample]:
    """``n_samples`` independent samples; sample ``i`` uses seed ``derive_seed(cfg.seed, i)``."""
    if n_samples < 1:
        raise ParameterError(f"n_samples must be >= 1, got {n_samples}")
    return [generate_sample(cfg.with_seed(sample_seed(cfg.seed, i))) for i in range(n_samples)]


def save_dataset(directory, samples, cfg: SynthConfig | None = None) -> Path:
    """Write masks as PGM, features as grid text, plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, s in enumerate(samples):
        mask_name = f"mask_{i:04d}.pgm"
        formats.write_pgm(directory / mask_name, s.mask)
        feat_names = []
        for k, f in enumerate(s.features, start=1):
            name = f"feat_{i:04d}_c{k}.txt"
            formats.write_grid(directory / name, f)
            feat_names.append(name)
        entries.append(
            {
                "seed": s.seed,
                "mask": mask_name,
                "features": feat_names,
                "achieved_ratio": s.achieved_ratio,
            }
        )
    manifest = {"schema": "v1", "config": cfg.to_dict() if cfg else None, "samples": entries}
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def load_dataset(manifest_path) -> list[SynthSample]:
    """Load any manifest of PGM masks plus grid-text feature files."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid manifest JSON: {exc}", os.fspath(manifest_path)) from None
    if not isinstance(manifest, dict) or "samples" not in manifest:
        raise FormatError("manifest must be an object with a 'samples' list", os.fspath(manifest_path))
    root = manifest_path.parent
    samples = []
    for entry in manifest["samples"]:
        mask = formats.read_pgm(root / entry["mask"])
        feats = tuple(formats.read_grid(root / name) for name in entry["features"])
        for f in feats:
            if f.shape != mask.shape:
                raise FormatError(
                    f"feature shape {f.shape} does not match mask shape {mask.shape}",
                    os.fspath(manifest_path),
                )
        samples.append(SynthSample(mask=mask, features=feats, seed=entry.get("seed")))
    return samples
