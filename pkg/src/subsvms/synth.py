"""Synthetic two-Gaussian benchmark data with an enforced separation margin.

Class means sit at +/-(mean_distance/2) on the first coordinate axis; each
class is an isotropic Gaussian with per-coordinate variance
``covariance_scale``.  When ``enforced_margin`` is positive, candidates whose
signed distance to the mid-hyperplane (first coordinate = 0) is below half
the margin, or which fall on the wrong side, are rejected and redrawn, so the
output is linearly separable with at least ``enforced_margin / 2`` clearance
on each side.  The minority class carries label +1 and its size is exactly
``round(beta * n_points)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset

__all__ = ["SynthSpec", "GenerationError", "generate"]


class GenerationError(RuntimeError):
    """Rejection sampling failed to make progress (spec infeasible)."""


@dataclass(frozen=True)
class SynthSpec:
    dimension: int
    n_points: int
    beta: float
    mean_distance: float = 2.0
    covariance_scale: float = 0.1
    enforced_margin: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.n_points < 2:
            raise ValueError("need at least 2 points")
        if not 0.0 < self.beta <= 0.5:
            raise ValueError("beta must lie in (0, 0.5]")
        if self.mean_distance <= 0:
            raise ValueError("mean_distance must be positive")
        if self.covariance_scale <= 0:
            raise ValueError("covariance_scale must be positive")
        if self.enforced_margin < 0:
            raise ValueError("enforced_margin must be non-negative")
        if self.enforced_margin >= self.mean_distance:
            raise ValueError("enforced_margin must be smaller than mean_distance")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _draw_class(rng, spec: SynthSpec, label: int, count: int) -> np.ndarray:
    mean = np.zeros(spec.dimension)
    mean[0] = label * spec.mean_distance / 2.0
    std = math.sqrt(spec.covariance_scale)
    half_margin = spec.enforced_margin / 2.0
    out = np.empty((count, spec.dimension))
    filled = 0
    drawn = 0
    while filled < count:
        batch = max(4 * (count - filled), 256)
        cand = rng.normal(loc=mean, scale=std, size=(batch, spec.dimension))
        drawn += batch
        if spec.enforced_margin > 0:
            keep = label * cand[:, 0] >= half_margin
            cand = cand[keep]
        take = min(len(cand), count - filled)
        out[filled : filled + take] = cand[:take]
        filled += take
        if drawn >= 10_000 and filled / drawn < 0.001:
            raise GenerationError(
                f"rejection rate above 99.9% after {drawn} draws; margin spec infeasible"
            )
    return out


def generate(spec: SynthSpec) -> LabeledDataset:
    """Deterministic function of ``spec``: same spec, same dataset."""
    n_minority = math.floor(spec.beta * spec.n_points + 0.5)
    n_majority = spec.n_points - n_minority
    if n_minority < 1 or n_majority < 1:
        raise ValueError("beta and n_points leave a class empty")
    rng = np.random.default_rng(spec.seed)
    X_min = _draw_class(rng, spec, +1, n_minority)
    X_maj = _draw_class(rng, spec, -1, n_majority)
    X = np.vstack([X_min, X_maj])
    y = np.concatenate([np.ones(n_minority, dtype=np.int64), -np.ones(n_majority, dtype=np.int64)])
    order = rng.permutation(spec.n_points)
    return LabeledDataset(X[order], y[order])
