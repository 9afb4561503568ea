"""Class-biased and bootstrap sampling over a dataset.

All draws are iid with replacement.  A biased draw first picks the minority
class of the (possibly corrupted) data with probability ``p``, then a point
uniformly within that class; setting ``p`` to the observed minority fraction
makes the draw distribution exactly uniform over all points.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, class_stats

__all__ = ["SamplerConfig", "p_biased_sample", "bootstrap_sample", "derive_seed"]


def derive_seed(*parts) -> int:
    """Stable 63-bit seed derived from arbitrary labeled parts.

    Uses SHA-256 over the canonical text of the parts, so derived streams are
    independent of execution order and identical across platforms and runs.
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class SamplerConfig:
    """``p`` is the probability of drawing from the minority class; ``s`` the
    subsample size."""

    p: float
    s: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")
        if self.s < 1:
            raise ValueError("subsample size s must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def p_biased_sample(d: LabeledDataset, cfg: SamplerConfig) -> np.ndarray:
    """``cfg.s`` iid index draws: minority class of ``d`` with probability
    ``cfg.p``, majority otherwise, then uniform within the chosen class."""
    stats = class_stats(d)
    rng = np.random.default_rng(cfg.seed)
    pick_minority = rng.random(cfg.s) < cfg.p
    within = rng.random(cfg.s)
    mino = stats.minority_indices
    majo = stats.majority_indices
    out = np.empty(cfg.s, dtype=np.int64)
    out[pick_minority] = mino[(within[pick_minority] * len(mino)).astype(np.int64)]
    out[~pick_minority] = majo[(within[~pick_minority] * len(majo)).astype(np.int64)]
    return out


def bootstrap_sample(d: LabeledDataset, size: int, seed: int) -> np.ndarray:
    """``size`` uniform with-replacement index draws over all points."""
    if size < 0:
        raise ValueError("size must be non-negative")
    rng = np.random.default_rng(seed)
    return rng.integers(0, d.n_points, size=size, dtype=np.int64)
