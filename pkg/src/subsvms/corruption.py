"""Adversarial label flipping with a controlled budget and direction.

The attack flips ``floor(rho * beta * n)`` labels of a clean dataset, where
``beta`` is the clean minority fraction.  ``alpha`` splits the flips between
the two directions.  Two conventions for ``alpha`` are supported:

* ``"appendix"`` (default): ``alpha`` is the fraction of flips that move
  majority points into the minority class.
* ``"experiment"``: ``alpha`` is the fraction of flips whose victims are
  picked from the minority class (the mirror image of the above).

Class identity (which label is "minority") is always determined on the clean
data, with ties broken toward +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset, class_stats

__all__ = [
    "CorruptionSpec",
    "CorruptionReport",
    "InfeasibleCorruptionError",
    "corrupt",
    "theoretical_fractions",
    "FRACTION_KEYS",
]

FRACTION_KEYS = (
    "frac_minority",
    "frac_majority",
    "frac_minority_clean",
    "frac_minority_flipped",
    "frac_majority_clean",
    "frac_majority_flipped",
)


class InfeasibleCorruptionError(ValueError):
    """The requested flip counts exceed what a class can supply."""


@dataclass(frozen=True)
class CorruptionSpec:
    rho: float
    alpha: float
    seed: int = 0
    convention: str = "appendix"

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.convention not in ("appendix", "experiment"):
            raise ValueError("convention must be 'appendix' or 'experiment'")


@dataclass(frozen=True)
class CorruptionReport:
    """Realized attack: counts per direction, the flip mask, and the class
    fractions of the corrupted data (relative to clean-minority identity)."""

    n_flipped: int
    n_majority_to_minority: int
    n_minority_to_majority: int
    flip_mask: np.ndarray = field(repr=False)
    realized_fractions: dict[str, float] = field(repr=False)
    minority_label: int = 1

    @property
    def flipped_indices(self) -> np.ndarray:
        return np.flatnonzero(self.flip_mask)


def _snap_floor(x: float) -> int:
    # floor with a tiny snap so products like 0.29 * 100 land on the integer
    # they represent mathematically
    f = math.floor(x)
    if f + 1 - x < 1e-9:
        return f + 1
    return f


def corrupt(d: LabeledDataset, spec: CorruptionSpec) -> tuple[LabeledDataset, CorruptionReport]:
    """Flip labels of ``d`` per ``spec``; feature vectors are untouched.

    Victims are chosen uniformly at random without replacement within each
    class.  Raises :class:`InfeasibleCorruptionError` when a direction asks
    for more points than its source class holds or a class would be emptied.
    """
    stats = class_stats(d)
    n = d.n_points
    n_c = _snap_floor(spec.rho * stats.minority_count)
    share = _snap_floor(spec.alpha * n_c + 0.5)  # round half up
    if spec.convention == "appendix":
        n_b_to_a = share
    else:
        n_b_to_a = n_c - share
    n_a_to_b = n_c - n_b_to_a

    n_mino, n_majo = stats.minority_count, stats.majority_count
    if n_a_to_b > n_mino or n_b_to_a > n_majo:
        raise InfeasibleCorruptionError(
            f"cannot flip {n_a_to_b} of {n_mino} minority / {n_b_to_a} of {n_majo} majority points"
        )
    if n_mino - n_a_to_b + n_b_to_a == 0 or n_majo - n_b_to_a + n_a_to_b == 0:
        raise InfeasibleCorruptionError(
            f"corruption would empty a class (flips {n_a_to_b} A->B, {n_b_to_a} B->A)"
        )

    rng = np.random.default_rng(spec.seed)
    flip_mask = np.zeros(n, dtype=bool)
    if n_b_to_a:
        flip_mask[rng.choice(stats.majority_indices, size=n_b_to_a, replace=False)] = True
    if n_a_to_b:
        flip_mask[rng.choice(stats.minority_indices, size=n_a_to_b, replace=False)] = True

    labels = d.labels.copy()
    labels[flip_mask] = -labels[flip_mask]
    corrupted = d.with_labels(labels)

    mino_clean = n_mino - n_a_to_b
    majo_clean = n_majo - n_b_to_a
    realized = {
        "frac_minority": (mino_clean + n_b_to_a) / n,
        "frac_majority": (majo_clean + n_a_to_b) / n,
        "frac_minority_clean": mino_clean / n,
        "frac_minority_flipped": n_b_to_a / n,
        "frac_majority_clean": majo_clean / n,
        "frac_majority_flipped": n_a_to_b / n,
    }
    report = CorruptionReport(
        n_flipped=n_c,
        n_majority_to_minority=n_b_to_a,
        n_minority_to_majority=n_a_to_b,
        flip_mask=flip_mask,
        realized_fractions=realized,
        minority_label=stats.minority_label,
    )
    return corrupted, report


def theoretical_fractions(beta: float, rho: float, alpha: float) -> dict[str, float]:
    """Expected class fractions after corrupting a ``beta``-minority dataset
    with budget ``rho`` and direction split ``alpha`` (majority-to-minority
    share).  Keys match ``CorruptionReport.realized_fractions``."""
    if not 0.0 < beta <= 0.5:
        raise ValueError("beta must lie in (0, 0.5]")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    minority = beta + alpha * rho * beta - (1.0 - alpha) * rho * beta
    return {
        "frac_minority": minority,
        "frac_majority": 1.0 - minority,
        "frac_minority_clean": beta - (1.0 - alpha) * rho * beta,
        "frac_minority_flipped": alpha * rho * beta,
        "frac_majority_clean": 1.0 - beta - alpha * rho * beta,
        "frac_majority_flipped": (1.0 - alpha) * rho * beta,
    }
