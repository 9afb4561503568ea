"""Subsampled bagging of SVMs with majority-vote label correction.

Each ensemble member is trained on a small class-biased subsample of the
(possibly corrupted) training data; every training point is then relabeled by
the majority vote of the members.  Member subsamples use seeds derived from
the master seed and the member index, so results do not depend on the order
in which members are trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
import numpy as np

from .dataset import LabeledDataset
from .sampling import SamplerConfig, derive_seed, p_biased_sample
from .svm import ConvergenceError, KernelSpec, SvmModel, TrainConfig, predict_labels, train

__all__ = [
    "EnsembleConfig",
    "EnsembleModel",
    "CorrectionResult",
    "EnsembleError",
    "default_subsample_size",
    "train_ensemble",
    "member_vote_matrix",
    "positive_vote_fraction",
    "predict_vote",
    "vote_predict_labels",
    "correct",
    "estimate_regularity",
]

TIE_RULES = ("keep_observed", "positive")


class EnsembleError(RuntimeError):
    """Too many ensemble members failed to train."""


def default_subsample_size(n_points: int, squared: bool = True) -> int:
    """``ceil(log^2 n)`` (natural log), or ``ceil(log n)`` when ``squared``
    is false.  Never below 2."""
    ln = math.log(n_points)
    return max(2, math.ceil(ln * ln if squared else ln))


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int
    sampler: SamplerConfig
    kernel: KernelSpec = KernelSpec()
    train: TrainConfig = TrainConfig()
    tie_rule: str = "keep_observed"

    def __post_init__(self):
        if self.n_members < 1:
            raise ValueError("n_members must be >= 1")
        if self.tie_rule not in TIE_RULES:
            raise ValueError(f"tie_rule must be one of {TIE_RULES}")


@dataclass(frozen=True)
class EnsembleModel:
    models: tuple[SvmModel, ...]
    config: EnsembleConfig
    failed_members: tuple[int, ...] = ()

    @property
    def n_members(self) -> int:
        return len(self.models)


@dataclass(frozen=True)
class CorrectionResult:
    """Relabeled dataset plus the per-point share of +1 votes and the indices
    whose labels changed."""

    corrected: LabeledDataset
    vote_fraction: np.ndarray = field(repr=False)
    changed_indices: np.ndarray = field(repr=False)

    @property
    def n_changed(self) -> int:
        return len(self.changed_indices)


def train_ensemble(d_hat: LabeledDataset, cfg: EnsembleConfig) -> EnsembleModel:
    """Train ``cfg.n_members`` SVMs on independent class-biased subsamples.

    Single-class subsamples produce degenerate constant members, which stay
    in the ensemble and vote their constant class.  Members whose solver does
    not converge are skipped and recorded; if fewer than half the members
    train, the ensemble is rejected.
    """
    d_hat.require_two_classes()
    models: list[SvmModel] = []
    failed: list[int] = []
    for j in range(cfg.n_members):
        member_cfg = replace(cfg.sampler, seed=derive_seed(cfg.sampler.seed, j))
        idx = p_biased_sample(d_hat, member_cfg)
        try:
            models.append(train(d_hat, cfg.kernel, cfg.train, indices=idx))
        except ConvergenceError:
            failed.append(j)
    if len(models) < cfg.n_members / 2:
        raise EnsembleError(
            f"only {len(models)} of {cfg.n_members} members trained (failed: {failed})"
        )
    return EnsembleModel(models=tuple(models), config=cfg, failed_members=tuple(failed))


def member_vote_matrix(ens: EnsembleModel, X) -> np.ndarray:
    """(n_members, n_points) matrix of member predictions in {-1, +1}."""
    return np.vstack([predict_labels(m, X) for m in ens.models])


def positive_vote_fraction(ens: EnsembleModel, X) -> np.ndarray:
    """Share of members voting +1 for each point; usable as a ranking score."""
    votes = member_vote_matrix(ens, X)
    return (votes == 1).sum(axis=0) / ens.n_members


def _labels_from_votes(
    pos_counts: np.ndarray, n_members: int, tie_rule: str, observed: np.ndarray | None
) -> np.ndarray:
    labels = np.where(2 * pos_counts > n_members, 1, -1).astype(np.int64)
    ties = 2 * pos_counts == n_members
    if ties.any():
        if tie_rule == "keep_observed":
            if observed is None:
                raise ValueError("keep_observed tie rule needs observed labels")
            labels[ties] = observed[ties]
        else:
            labels[ties] = 1
    return labels


def correct(
    d_hat: LabeledDataset, ens: EnsembleModel, tie_rule: str | None = None
) -> CorrectionResult:
    """Relabel every point of ``d_hat`` by the members' majority vote.

    Exact ties follow ``tie_rule`` (default: the ensemble config), either
    keeping the observed label or forcing +1.
    """
    rule = tie_rule if tie_rule is not None else ens.config.tie_rule
    if rule not in TIE_RULES:
        raise ValueError(f"tie_rule must be one of {TIE_RULES}")
    votes = member_vote_matrix(ens, d_hat.features)
    pos_counts = (votes == 1).sum(axis=0)
    labels = _labels_from_votes(pos_counts, ens.n_members, rule, d_hat.labels)
    changed = np.flatnonzero(labels != d_hat.labels)
    return CorrectionResult(
        corrected=d_hat.with_labels(labels),
        vote_fraction=pos_counts / ens.n_members,
        changed_indices=changed,
    )


def vote_predict_labels(ens: EnsembleModel, X) -> np.ndarray:
    """Majority-vote labels for arbitrary points (ties resolve to +1)."""
    votes = member_vote_matrix(ens, X)
    pos_counts = (votes == 1).sum(axis=0)
    return _labels_from_votes(pos_counts, ens.n_members, "positive", None)


def predict_vote(ens: EnsembleModel, x) -> tuple[int, float]:
    """Majority label for one point and the fraction of votes it received."""
    frac_pos = float(positive_vote_fraction(ens, np.atleast_2d(np.asarray(x, dtype=float)))[0])
    label = 1 if frac_pos >= 0.5 else -1
    return label, max(frac_pos, 1.0 - frac_pos)


def estimate_regularity(
    d: LabeledDataset,
    subset_size: int,
    delta: float,
    trials: int,
    sampler_p: float,
    kernel: KernelSpec,
    train_cfg: TrainConfig,
    seed: int = 0,
    eval_draws: int | None = None,
) -> float:
    """Empirical error quantile of SVMs trained on small random subsets.

    Draws ``trials`` independent ``subset_size``-point subsets from the
    class-biased distribution over ``d``, trains one SVM per subset, and
    measures each model's error rate under the same distribution on a fresh
    sample (``eval_draws`` points, default ``10 * len(d)``).  Returns the
    empirical (1 - delta) quantile of the member error rates.
    """
    if trials < 20:
        raise ValueError("need at least 20 trials for a stable quantile")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    n_eval = 10 * d.n_points if eval_draws is None else eval_draws
    errors = np.empty(trials)
    for t in range(trials):
        train_idx = p_biased_sample(
            d, SamplerConfig(p=sampler_p, s=subset_size, seed=derive_seed(seed, "train", t))
        )
        model = train(d, kernel, train_cfg, indices=train_idx)
        eval_idx = p_biased_sample(
            d, SamplerConfig(p=sampler_p, s=n_eval, seed=derive_seed(seed, "eval", t))
        )
        preds = predict_labels(model, d.features[eval_idx])
        errors[t] = np.mean(preds != d.labels[eval_idx])
    return float(np.quantile(errors, 1.0 - delta, method="higher"))
