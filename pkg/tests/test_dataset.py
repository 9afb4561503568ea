import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subsvms import (
    DatasetError,
    FeatureVector,
    KernelSpec,
    LabeledDataset,
    LibsvmFormatError,
    class_stats,
    estimate_margin,
    estimate_radius,
    parse_libsvm,
    write_libsvm,
)


def test_parse_basic():
    d = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0")
    assert d.n_points == 2
    assert d.dimension == 3
    assert list(d.labels) == [1, -1]
    assert d.features[0, 0] == 0.5 and d.features[0, 2] == 2.0
    assert d.features[1, 1] == 1.0


def test_parse_empty_stream_is_error():
    with pytest.raises(DatasetError, match="empty"):
        parse_libsvm("")
    with pytest.raises(DatasetError):
        parse_libsvm(b"\n\n  \n")


def test_parse_accepts_bytes_and_crlf_and_blank_lines():
    d = parse_libsvm(b"+1 1:2\r\n\r\n-1 1:-2\r\n")
    assert d.n_points == 2
    assert d.features[1, 0] == -2.0


def test_parse_zero_one_labels_normalized():
    d = parse_libsvm("0 1:1\n1 1:2\n")
    assert list(d.labels) == [-1, 1]


def test_parse_label_variants():
    d = parse_libsvm("+1.0 1:1\n-1 1:1\n1 1:1\n")
    assert list(d.labels) == [1, -1, 1]


def test_parse_unknown_label_reports_line():
    with pytest.raises(LibsvmFormatError, match="line 2"):
        parse_libsvm("+1 1:1\n3 1:1\n")


def test_parse_malformed_entry_reports_line():
    with pytest.raises(LibsvmFormatError, match="line 1"):
        parse_libsvm("+1 1:abc\n")
    with pytest.raises(LibsvmFormatError, match="malformed"):
        parse_libsvm("+1 7\n")


def test_parse_non_increasing_indices():
    with pytest.raises(LibsvmFormatError, match="non-increasing"):
        parse_libsvm("+1 3:1 2:1\n")
    with pytest.raises(LibsvmFormatError, match="non-increasing"):
        parse_libsvm("+1 2:1 2:5\n")


def test_write_single_point():
    d = LabeledDataset(np.array([[1.0]]), np.array([1]))
    assert write_libsvm(d) == b"+1 1:1\n"


def test_write_zero_entries_omitted():
    d = LabeledDataset(np.array([[0.0, 2.5], [1.0, 0.0]]), np.array([1, -1]))
    assert write_libsvm(d) == b"+1 2:2.5\n-1 1:1\n"


def test_roundtrip_random_sparse():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 12))
    X[rng.random((100, 12)) < 0.6] = 0.0
    X[0, 11] = 1.25  # keep the max dimension occupied
    d = LabeledDataset(X, rng.choice([-1, 1], size=100))
    assert parse_libsvm(write_libsvm(d)) == d


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_write_parse_write_idempotent(data):
    n = data.draw(st.integers(2, 12))
    dim = data.draw(st.integers(1, 6))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    X = np.round(rng.normal(size=(n, dim)), 3)
    X[:, dim - 1][0] = 1.0
    d = LabeledDataset(X, rng.choice([-1, 1], size=n))
    once = write_libsvm(d)
    again = write_libsvm(parse_libsvm(once))
    assert once == again


def test_feature_vector_invariants():
    with pytest.raises(DatasetError):
        FeatureVector((2, 2), (1.0, 1.0), dimension=3)
    with pytest.raises(DatasetError):
        FeatureVector((0,), (1.0,), dimension=3)
    with pytest.raises(DatasetError):
        FeatureVector((4,), (1.0,), dimension=3)
    with pytest.raises(DatasetError):
        FeatureVector((1,), (float("nan"),), dimension=1)
    fv = FeatureVector((1, 3), (0.5, 2.0), dimension=3)
    assert list(fv.to_dense()) == [0.5, 0.0, 2.0]


def test_class_stats_a1a_shaped():
    y = np.array([1] * 395 + [-1] * (1605 - 395))
    d = LabeledDataset(np.ones((1605, 1)), y)
    stats = class_stats(d)
    assert stats.minority_label == 1
    assert stats.minority_count == 395
    assert stats.beta == pytest.approx(0.2461, abs=5e-5)


def test_class_stats_tie_rule():
    d = LabeledDataset(np.ones((1000, 1)), np.array([1] * 500 + [-1] * 500))
    stats = class_stats(d)
    assert stats.beta == 0.5
    assert stats.minority_label == 1


def test_class_stats_arithmetic():
    d = LabeledDataset(np.ones((1000, 1)), np.array([1] * 50 + [-1] * 950))
    assert class_stats(d).beta == 0.05


def test_class_stats_count_is_integer_times_beta():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 400))
        y = rng.choice([-1, 1], size=n)
        if np.all(y == y[0]):
            y[0] = -y[0]
        stats = class_stats(LabeledDataset(np.ones((n, 1)), y))
        assert stats.beta * n == pytest.approx(stats.minority_count, abs=1e-9)


def test_class_stats_single_class_error():
    d = LabeledDataset(np.ones((3, 1)), np.array([1, 1, 1]))
    with pytest.raises(DatasetError, match="single class"):
        class_stats(d)


def test_radius_two_points_and_margin():
    d = LabeledDataset(np.array([[-1.0], [1.0]]), np.array([-1, 1]))
    assert estimate_radius(d) == 1.0
    assert estimate_margin(d, KernelSpec("linear")) == pytest.approx(1.0, abs=1e-6)


def test_radius_unit_circle():
    theta = np.linspace(0, 2 * math.pi, 17)[:-1]
    X = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    d = LabeledDataset(X, np.where(np.arange(16) % 2 == 0, 1, -1))
    assert estimate_radius(d) == pytest.approx(1.0, abs=1e-12)


def test_radius_rbf_kernel_space():
    d = LabeledDataset(np.array([[5.0], [9.0]]), np.array([-1, 1]))
    assert estimate_radius(d, KernelSpec("rbf", sigma_sq=1.0)) == pytest.approx(1.0)


def test_radius_permutation_invariant():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 4))
    y = rng.choice([-1, 1], size=30)
    d = LabeledDataset(X, y)
    perm = rng.permutation(30)
    assert estimate_radius(d) == estimate_radius(LabeledDataset(X[perm], y[perm]))


def test_dataset_immutable():
    d = LabeledDataset(np.ones((2, 2)), np.array([1, -1]))
    with pytest.raises(ValueError):
        d.features[0, 0] = 5.0
    with pytest.raises(ValueError):
        d.labels[0] = -1
