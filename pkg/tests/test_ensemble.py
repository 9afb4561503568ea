import numpy as np
import pytest

from subsvms import (
    CorruptionSpec,
    EnsembleConfig,
    KernelSpec,
    LabeledDataset,
    SamplerConfig,
    SynthSpec,
    TrainConfig,
    correct,
    corrupt,
    estimate_regularity,
    generate,
    predict_vote,
    train_ensemble,
    vote_predict_labels,
)
from subsvms.ensemble import default_subsample_size, member_vote_matrix, positive_vote_fraction
from _oracles import separable_dataset


def _config(J=16, p=0.5, s=24, seed=0, kernel=None, tie="keep_observed"):
    return EnsembleConfig(
        n_members=J,
        sampler=SamplerConfig(p=p, s=s, seed=seed),
        kernel=kernel or KernelSpec("rbf", sigma_sq=1.0),
        train=TrainConfig(C=100.0, loss="l2"),
        tie_rule=tie,
    )


def test_default_subsample_size():
    assert default_subsample_size(1000) == 48  # ceil(log(1000)^2)
    assert default_subsample_size(1000, squared=False) == 7
    assert default_subsample_size(3) >= 2


def test_unanimous_vote():
    d = separable_dataset(np.random.default_rng(0))
    ens = train_ensemble(d, _config(J=8, kernel=KernelSpec("linear")))
    label, frac = predict_vote(ens, np.full(d.dimension, 2.0))
    assert label == 1
    assert frac == 1.0


def test_tie_keeps_observed_label():
    d = separable_dataset(np.random.default_rng(1))
    ens = train_ensemble(d, _config(J=4))
    votes = np.array([[1], [1], [-1], [-1]])

    from subsvms.ensemble import _labels_from_votes

    pos_counts = (votes == 1).sum(axis=0)
    assert _labels_from_votes(pos_counts, 4, "keep_observed", np.array([-1]))[0] == -1
    assert _labels_from_votes(pos_counts, 4, "positive", None)[0] == 1


def test_vote_fraction_split():
    # 2 of 3 votes for the majority label reports fraction 2/3
    from subsvms.ensemble import _labels_from_votes

    pos_counts = np.array([2])
    labels = _labels_from_votes(pos_counts, 3, "positive", None)
    assert labels[0] == 1
    assert pos_counts[0] / 3 == pytest.approx(2 / 3)


def test_predict_vote_agrees_with_correct_on_training_points():
    d = generate(SynthSpec(dimension=2, n_points=200, beta=0.3, seed=5))
    d_hat, _ = corrupt(d, CorruptionSpec(rho=0.5, alpha=0.5, seed=2))
    ens = train_ensemble(d_hat, _config(J=9, seed=3))  # odd J: no ties
    res = correct(d_hat, ens)
    assert np.array_equal(vote_predict_labels(ens, d_hat.features), res.corrected.labels)


def test_correction_preserves_features_and_reports_changes():
    d = generate(SynthSpec(dimension=2, n_points=300, beta=0.25, seed=8))
    d_hat, _ = corrupt(d, CorruptionSpec(rho=0.75, alpha=0.5, seed=4))
    ens = train_ensemble(d_hat, _config(J=32, s=30, seed=5))
    res = correct(d_hat, ens)
    assert np.array_equal(res.corrected.features, d_hat.features)
    diff = np.flatnonzero(res.corrected.labels != d_hat.labels)
    assert np.array_equal(diff, res.changed_indices)
    # vote fractions consistent with assigned labels away from ties
    strict = res.vote_fraction != 0.5
    assert np.all(
        np.where(res.vote_fraction[strict] > 0.5, 1, -1) == res.corrected.labels[strict]
    )


def test_determinism_same_master_seed():
    d = generate(SynthSpec(dimension=2, n_points=200, beta=0.3, seed=9))
    d_hat, _ = corrupt(d, CorruptionSpec(rho=0.6, alpha=0.3, seed=6))
    r1 = correct(d_hat, train_ensemble(d_hat, _config(J=16, seed=7)))
    r2 = correct(d_hat, train_ensemble(d_hat, _config(J=16, seed=7)))
    assert r1.corrected == r2.corrected
    assert np.array_equal(r1.vote_fraction, r2.vote_fraction)


def test_members_differ_across_indices():
    d = generate(SynthSpec(dimension=2, n_points=200, beta=0.3, seed=10))
    d_hat, _ = corrupt(d, CorruptionSpec(rho=0.75, alpha=0.5, seed=1))
    ens = train_ensemble(d_hat, _config(J=8, seed=8))
    votes = member_vote_matrix(ens, d_hat.features)
    assert len({tuple(v) for v in votes}) > 1


def test_degenerate_members_kept_and_flagged():
    # tiny minority and uniform-ish sampling: single-class subsamples abound
    y = np.array([1] * 3 + [-1] * 197)
    X = np.vstack([np.random.default_rng(0).normal(2, 0.2, (3, 2)),
                   np.random.default_rng(1).normal(-2, 0.2, (197, 2))])
    d = LabeledDataset(X, y)
    cfg = _config(J=16, p=0.015, s=10, seed=9)
    ens = train_ensemble(d, cfg)
    assert ens.n_members == 16
    assert any(m.degenerate for m in ens.models)
    # degenerate members vote their constant class
    frac = positive_vote_fraction(ens, np.array([[0.0, 0.0]]))
    assert 0.0 <= frac[0] <= 1.0


def test_single_member_ensemble_is_one_svm():
    from subsvms import predict_labels

    d = generate(SynthSpec(dimension=2, n_points=100, beta=0.4, seed=11))
    stats_p = 0.4  # p = beta: uniform draw over the data
    cfg = _config(J=1, s=40, p=stats_p, seed=10)
    ens = train_ensemble(d, cfg)
    res = correct(d, ens)
    assert res.corrected.n_points == 100
    assert np.array_equal(res.corrected.labels, predict_labels(ens.models[0], d.features))


def test_every_member_accurate_on_clean_separable_data():
    d = generate(SynthSpec(dimension=2, n_points=1000, beta=0.25, seed=22))
    cfg = _config(J=128, s=default_subsample_size(1000), seed=23)
    ens = train_ensemble(d, cfg)
    votes = member_vote_matrix(ens, d.features)
    per_member_accuracy = (votes == d.labels).mean(axis=1)
    assert per_member_accuracy.min() >= 0.95


def test_no_harm_on_clean_separable_data():
    d = generate(SynthSpec(dimension=2, n_points=1000, beta=0.25, seed=12))
    cfg = _config(J=128, s=default_subsample_size(1000), seed=11)
    ens = train_ensemble(d, cfg)
    res = correct(d, ens)
    assert res.n_changed <= 10  # at most 1% of labels


def test_error_decays_as_members_double():
    d = generate(SynthSpec(dimension=2, n_points=500, beta=0.25, seed=13))
    sizes = [2**k for k in range(8)]
    curves = []
    for seed in range(5):
        d_hat, _ = corrupt(d, CorruptionSpec(rho=0.75, alpha=0.5, seed=20 + seed))
        ens = train_ensemble(d_hat, _config(J=128, s=39, seed=30 + seed))
        votes = member_vote_matrix(ens, d_hat.features)
        errs = []
        for J in sizes:
            pos = (votes[:J] == 1).sum(axis=0)
            labels = np.where(2 * pos > J, 1, np.where(2 * pos < J, -1, d_hat.labels))
            errs.append(np.mean(labels != d.labels))
        curves.append(errs)
    mean_curve = np.mean(curves, axis=0)
    # decreasing in expectation; a small bump allowance absorbs seed noise
    assert np.all(np.diff(mean_curve) <= 0.01)
    assert mean_curve[-1] <= mean_curve[0] / 3
    assert mean_curve[0] - mean_curve[-1] >= 0.1


def test_recorrection_is_stable():
    d = generate(SynthSpec(dimension=2, n_points=500, beta=0.25, seed=14))
    d_hat, _ = corrupt(d, CorruptionSpec(rho=0.75, alpha=0.5, seed=15))
    cfg = _config(J=64, s=39, seed=16)
    first = correct(d_hat, train_ensemble(d_hat, cfg))
    second = correct(first.corrected, train_ensemble(first.corrected, cfg))
    assert second.n_changed <= first.n_changed


def test_regularity_well_separated_clusters():
    d = separable_dataset(np.random.default_rng(17), n_per_class=100, gap=3.0)
    theta = estimate_regularity(
        d, 8, 0.1, 30, 0.5, KernelSpec("linear"), TrainConfig(C=100.0, loss="l2"), seed=0
    )
    assert theta == 0.0


def test_regularity_coin_labels():
    rng = np.random.default_rng(18)
    X = rng.normal(size=(200, 2))
    y = rng.choice([-1, 1], size=200)
    d = LabeledDataset(X, y)
    theta = estimate_regularity(
        d, 8, 0.1, 30, 0.5, KernelSpec("linear"), TrainConfig(C=1.0, loss="l2"), seed=0
    )
    assert theta == pytest.approx(0.5, abs=0.05)


def test_regularity_non_increasing_in_subset_size():
    d = separable_dataset(np.random.default_rng(19), n_per_class=100, gap=3.0)
    thetas = [
        estimate_regularity(
            d, r, 0.1, 25, 0.5, KernelSpec("linear"), TrainConfig(C=100.0, loss="l2"), seed=2
        )
        for r in (4, 8, 16, 32)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(thetas, thetas[1:]))


def test_regularity_validation():
    d = separable_dataset(np.random.default_rng(20))
    with pytest.raises(ValueError, match="trials"):
        estimate_regularity(d, 4, 0.1, 5, 0.5, KernelSpec("linear"), TrainConfig(), seed=0)
    with pytest.raises(ValueError, match="delta"):
        estimate_regularity(d, 4, 0.7, 25, 0.5, KernelSpec("linear"), TrainConfig(), seed=0)


def test_too_many_failed_members_rejects_ensemble():
    from subsvms.ensemble import EnsembleError

    d = generate(SynthSpec(dimension=2, n_points=200, beta=0.3, seed=30))
    d_hat, _ = corrupt(d, CorruptionSpec(rho=0.75, alpha=0.5, seed=31))
    cfg = EnsembleConfig(
        n_members=8,
        sampler=SamplerConfig(p=0.5, s=30, seed=32),
        kernel=KernelSpec("rbf", sigma_sq=1.0),
        train=TrainConfig(C=100.0, loss="l2", max_passes=2),
    )
    with pytest.raises(EnsembleError, match="members trained"):
        train_ensemble(d_hat, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        EnsembleConfig(n_members=0, sampler=SamplerConfig(p=0.5, s=4))
    with pytest.raises(ValueError):
        EnsembleConfig(n_members=2, sampler=SamplerConfig(p=0.5, s=4), tie_rule="coin")
