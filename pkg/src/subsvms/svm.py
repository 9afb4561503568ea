"""Kernel SVM training via sequential minimal optimization, and prediction.

The solver works on the dual problem

    min_a  0.5 * a' Q a - sum(a)   s.t.  0 <= a_i <= C_i,  sum(a_i y_i) = 0

with Q_ij = y_i y_j K(x_i, x_j), picking the maximal KKT-violating pair each
iteration.  Squared-slack (L2) penalties are handled by dropping the upper box
bound and shifting the kernel diagonal, which leaves the prediction-time
kernel untouched.  Class weighting multiplies the penalty of the positive
class by ``weight_ratio``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .dataset import DatasetError, FeatureVector, LabeledDataset

__all__ = [
    "ConvergenceError",
    "NonSeparableError",
    "KernelSpec",
    "TrainConfig",
    "SvmModel",
    "train",
    "decision_value",
    "decision_values",
    "predict",
    "predict_labels",
    "estimate_margin",
    "model_to_json",
    "model_from_json",
]

# Full Gram matrices are cached up to this many points; bigger problems fall
# back to per-row kernel evaluation.
GRAM_CACHE_LIMIT = 4096


class ConvergenceError(RuntimeError):
    """The solver did not reach the requested KKT tolerance."""


class NonSeparableError(RuntimeError):
    """Hard-margin training failed: the data admits no separating function."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel function: ``linear`` is the plain inner product, ``rbf`` is
    ``exp(-||x-z||^2 / (2 sigma_sq))``.  ``rbf_from_gamma`` accepts the
    alternative ``exp(-gamma ||x-z||^2)`` parameterization."""

    kind: str = "linear"
    sigma_sq: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be positive for the rbf kernel")

    @classmethod
    def rbf_from_gamma(cls, gamma: float) -> "KernelSpec":
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return cls(kind="rbf", sigma_sq=1.0 / (2.0 * gamma))

    def cross(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Kernel matrix K[i, j] = K(A[i], B[j])."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.kind == "linear":
            return A @ B.T
        sq = (
            np.einsum("ij,ij->i", A, A)[:, None]
            + np.einsum("ij,ij->i", B, B)[None, :]
            - 2.0 * (A @ B.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.sigma_sq))

    def diagonal(self, A: np.ndarray) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if self.kind == "linear":
            return np.einsum("ij,ij->i", A, A)
        return np.ones(A.shape[0])


@dataclass(frozen=True)
class TrainConfig:
    """Solver settings.

    ``C`` is the penalty, ``weight_ratio`` the ratio C(+1)/C(-1) of per-class
    penalties, ``loss`` one of ``l1``/``l2``.  ``l2_shift_scale`` controls the
    diagonal added for the squared-slack loss: shift_i = l2_shift_scale / C_i,
    with the default 0.5 giving 1/(2 C_i).
    """

    C: float = 100.0
    weight_ratio: float = 1.0
    loss: str = "l2"
    tolerance: float = 1e-3
    max_passes: int = 1_000_000
    l2_shift_scale: float = 0.5
    working_set: str = "second_order"

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.weight_ratio > 0:
            raise ValueError("weight_ratio must be positive")
        if self.loss not in ("l1", "l2"):
            raise ValueError("loss must be 'l1' or 'l2'")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if not self.l2_shift_scale > 0:
            raise ValueError("l2_shift_scale must be positive")
        if self.working_set not in ("second_order", "max_pair"):
            raise ValueError("working_set must be 'second_order' or 'max_pair'")


@dataclass(frozen=True)
class SvmModel:
    """Trained classifier: f(x) = sum_i alpha_i y_i K(x_i, x) + bias.

    Non-support points (alpha = 0) are dropped.  ``degenerate`` marks the
    constant classifier returned for single-class input; it predicts
    ``constant_label`` everywhere.
    """

    kernel: KernelSpec
    support_vectors: np.ndarray = field(repr=False)
    support_labels: np.ndarray = field(repr=False)
    support_indices: np.ndarray = field(repr=False)
    alphas: np.ndarray = field(repr=False)
    bias: float
    slack_norm_sq: float
    dimension: int
    degenerate: bool = False
    constant_label: int = 0
    kkt_violation: float = 0.0
    dual_objective: float = 0.0

    @property
    def n_support(self) -> int:
        return 0 if self.degenerate else len(self.alphas)

    def weight_norm_sq(self) -> float:
        """||w||^2 in feature space (prediction-time kernel, no diagonal shift)."""
        if self.degenerate:
            return 0.0
        K = self.kernel.cross(self.support_vectors, self.support_vectors)
        coef = self.alphas * self.support_labels
        return float(coef @ K @ coef)


def _as_matrix(x, dimension: int) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.to_dense(dimension)[None, :]
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :]
    return arr


def decision_values(m: SvmModel, X) -> np.ndarray:
    X = _as_matrix(X, m.dimension)
    if m.degenerate:
        return np.full(X.shape[0], float(m.constant_label))
    K = m.kernel.cross(m.support_vectors, X)
    return (m.alphas * m.support_labels) @ K + m.bias


def decision_value(m: SvmModel, x) -> float:
    return float(decision_values(m, x)[0])


def predict_labels(m: SvmModel, X) -> np.ndarray:
    """Sign of the decision value, with 0 mapped to +1."""
    vals = decision_values(m, X)
    return np.where(vals >= 0.0, 1, -1).astype(np.int64)


def predict(m: SvmModel, x) -> int:
    return int(predict_labels(m, x)[0])


def _degenerate_model(kernel: KernelSpec, label: int, dimension: int) -> SvmModel:
    return SvmModel(
        kernel=kernel,
        support_vectors=np.zeros((0, dimension)),
        support_labels=np.zeros(0, dtype=np.int64),
        support_indices=np.zeros(0, dtype=np.int64),
        alphas=np.zeros(0),
        bias=float(label),
        slack_norm_sq=0.0,
        dimension=dimension,
        degenerate=True,
        constant_label=int(label),
    )


class _GramSource:
    """Row access to the training Gram matrix, cached in full when small."""

    def __init__(self, kernel: KernelSpec, X: np.ndarray):
        self.kernel = kernel
        self.X = X
        n = X.shape[0]
        self.full = np.ascontiguousarray(kernel.cross(X, X)) if n <= GRAM_CACHE_LIMIT else None

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        return self.kernel.cross(self.X[i], self.X)[0]

    def diag(self) -> np.ndarray:
        if self.full is not None:
            return np.diagonal(self.full).copy()
        return self.kernel.diagonal(self.X)


try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@_njit(cache=True)
def _smo_core(K, yf, alpha, G, box, shift, tol, max_iter, second_order):
    """Pair-update loop on a fully cached Gram matrix.

    Mutates ``alpha`` and ``G``; returns (m, M, iterations used) where m/M
    are the extreme KKT scores of the final state.  Converged iff
    m - M <= tol.
    """
    n = K.shape[0]
    used = 0
    while True:
        m = -1e300
        M = 1e300
        i = -1
        j = -1
        for t in range(n):
            sc = -yf[t] * G[t]
            if (yf[t] > 0.0 and alpha[t] < box[t]) or (yf[t] < 0.0 and alpha[t] > 0.0):
                if sc > m:
                    m = sc
                    i = t
            if (yf[t] < 0.0 and alpha[t] < box[t]) or (yf[t] > 0.0 and alpha[t] > 0.0):
                if sc < M:
                    M = sc
                    j = t
        if i < 0 or j < 0:
            return 0.0, 0.0, used
        if m - M <= tol or used >= max_iter:
            return m, M, used
        used += 1

        if second_order:
            # among the improving candidates, pick the largest decrease of
            # the dual objective, b^2 / a
            K_ii = K[i, i] + shift[i]
            best = -1.0
            for t in range(n):
                if (yf[t] < 0.0 and alpha[t] < box[t]) or (yf[t] > 0.0 and alpha[t] > 0.0):
                    b = m + yf[t] * G[t]
                    if b > 0.0:
                        a = K_ii + K[t, t] + shift[t] - 2.0 * K[i, t]
                        if a < 1e-12:
                            a = 1e-12
                        gain = b * b / a
                        if gain > best:
                            best = gain
                            j = t

        quad = K[i, i] + shift[i] + K[j, j] + shift[j] - 2.0 * K[i, j]
        if quad < 1e-12:
            quad = 1e-12
        step = (m + yf[j] * G[j]) / quad
        cap_i = box[i] - alpha[i] if yf[i] > 0.0 else alpha[i]
        cap_j = alpha[j] if yf[j] > 0.0 else box[j] - alpha[j]
        if cap_i < step:
            step = cap_i
        if cap_j < step:
            step = cap_j
        alpha[i] += yf[i] * step
        alpha[j] -= yf[j] * step
        if alpha[i] < 1e-12:
            alpha[i] = 0.0
        elif alpha[i] > box[i] - 1e-12:
            alpha[i] = box[i]
        if alpha[j] < 1e-12:
            alpha[j] = 0.0
        elif alpha[j] > box[j] - 1e-12:
            alpha[j] = box[j]
        for t in range(n):
            G[t] += step * yf[t] * (K[i, t] - K[j, t])
        G[i] += step * yf[i] * shift[i]
        G[j] -= step * yf[j] * shift[j]


def _smo_rows(gram: _GramSource, yf, alpha, G, box, shift, tol, max_iter, second_order):
    """Same update loop with per-row kernel evaluation (large problems)."""
    n = len(yf)
    diag = gram.diag() + shift
    pos = yf > 0.0
    used = 0
    while True:
        score = -yf * G
        up = (pos & (alpha < box)) | (~pos & (alpha > 0.0))
        low = (~pos & (alpha < box)) | (pos & (alpha > 0.0))
        if not up.any() or not low.any():
            return 0.0, 0.0, used
        su = np.where(up, score, -np.inf)
        sl = np.where(low, score, np.inf)
        i = int(np.argmax(su))
        j = int(np.argmin(sl))
        m, M = float(su[i]), float(sl[j])
        if m - M <= tol or used >= max_iter:
            return m, M, used
        used += 1

        row_i = gram.row(i).copy()
        row_i[i] += shift[i]
        if second_order:
            b = m - score
            a = np.maximum(diag + diag[i] - 2.0 * row_i, 1e-12)
            gain = np.where(low & (b > 0.0), b * b / a, -np.inf)
            j = int(np.argmax(gain))
        row_j = gram.row(j).copy()
        row_j[j] += shift[j]
        quad = max(row_i[i] + row_j[j] - 2.0 * row_i[j], 1e-12)
        step = (m - float(score[j])) / quad
        cap_i = (box[i] - alpha[i]) if pos[i] else alpha[i]
        cap_j = alpha[j] if pos[j] else (box[j] - alpha[j])
        step = min(step, cap_i, cap_j)
        alpha[i] += yf[i] * step
        alpha[j] -= yf[j] * step
        for k in (i, j):
            if alpha[k] < 1e-12:
                alpha[k] = 0.0
            elif alpha[k] > box[k] - 1e-12:
                alpha[k] = box[k]
        G += step * yf * (row_i - row_j)


def train(
    data: LabeledDataset,
    kernel: KernelSpec,
    cfg: TrainConfig,
    indices: Sequence[int] | np.ndarray | None = None,
) -> SvmModel:
    """Train an SVM on ``data`` (optionally restricted to ``indices``, which
    may contain duplicates as produced by with-replacement subsampling).

    Raises :class:`ConvergenceError` if the KKT tolerance is not reached
    within ``cfg.max_passes`` pair updates.  Single-class input yields a
    constant classifier flagged ``degenerate``.
    """
    if indices is None:
        X, y = data.features, data.labels
        orig_index = np.arange(data.n_points, dtype=np.int64)
    else:
        orig_index = np.asarray(indices, dtype=np.int64)
        if orig_index.size == 0:
            raise DatasetError("cannot train on an empty index view")
        X = data.features[orig_index]
        y = data.labels[orig_index]

    n = X.shape[0]
    if np.all(y == y[0]):
        return _degenerate_model(kernel, int(y[0]), data.dimension)

    yf = y.astype(float)
    # per-point penalty: positive class scaled by the weight ratio
    C_i = np.where(y == 1, cfg.C * cfg.weight_ratio, cfg.C)
    gram = _GramSource(kernel, X)
    if cfg.loss == "l2":
        shift = cfg.l2_shift_scale / C_i
        box = np.full(n, np.inf)
    else:
        shift = np.zeros(n)
        box = C_i.astype(float)

    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of the dual objective at alpha = 0

    # Convergence requires both the KKT violation below tolerance and a small
    # duality gap; after a KKT stop with too large a gap, the solver resumes
    # at half the tolerance (alpha/G carry over).
    second_order = cfg.working_set == "second_order"
    tol = cfg.tolerance
    gap_limit = None
    m_val = M_val = 0.0
    budget = cfg.max_passes
    while True:
        if gram.full is not None:
            m_val, M_val, used = _smo_core(
                gram.full, yf, alpha, G, box, shift, tol, budget, second_order
            )
        else:
            m_val, M_val, used = _smo_rows(
                gram, yf, alpha, G, box, shift, tol, budget, second_order
            )
        budget -= used
        if m_val - M_val > tol:
            raise ConvergenceError(
                f"SMO did not converge within {cfg.max_passes} iterations "
                f"(violation {m_val - M_val:.3e}, tolerance {cfg.tolerance:.3e})"
            )
        dual = float(0.5 * (alpha.sum() - alpha @ G))
        if gap_limit is None:
            gap_limit = max(1e-6, 1e-3 * abs(dual))
        if _duality_gap(alpha, G, yf, C_i, cfg, shift, m_val, M_val) <= gap_limit:
            break
        if budget <= 0:
            raise ConvergenceError(
                f"duality gap stayed above {gap_limit:.3e} within {cfg.max_passes} iterations"
            )
        if tol < 1e-12:
            break  # at this violation level the gap check is numerical noise
        tol *= 0.5

    # at a KKT point the free-vector scores -y*G all equal the bias; the
    # midpoint of the up/low extremes caps every residual at (m - M)/2
    bias = 0.5 * (m_val + M_val)
    dual = float(0.5 * (alpha.sum() - alpha @ G))

    # slack diagnostic from the unshifted decision function
    sv = np.flatnonzero(alpha > 1e-10)
    coef = alpha[sv] * yf[sv]
    if gram.full is not None:
        u = gram.full[:, sv] @ coef
    else:
        u = kernel.cross(X, X[sv]) @ coef
    xi = np.maximum(0.0, 1.0 - yf * (u + bias))
    slack_norm_sq = float(xi @ xi)

    return SvmModel(
        kernel=kernel,
        support_vectors=X[sv].copy(),
        support_labels=y[sv].copy(),
        support_indices=orig_index[sv].copy(),
        alphas=alpha[sv].copy(),
        bias=float(bias),
        slack_norm_sq=slack_norm_sq,
        dimension=data.dimension,
        kkt_violation=float(max(m_val - M_val, 0.0)),
        dual_objective=dual,
    )


def _duality_gap(alpha, G, yf, C_i, cfg, shift, m_val, M_val) -> float:
    bias = 0.5 * (m_val + M_val)
    # y*u (shifted problem) = G + 1; remove the diagonal shift contribution
    yu = G + 1.0 - alpha * shift
    xi = np.maximum(0.0, 1.0 - (yu + yf * bias))
    wsq_shifted = float(alpha @ (G + 1.0))  # alpha' Q~ alpha
    dual = float(alpha.sum() - 0.5 * wsq_shifted)
    if cfg.loss == "l2":
        primal = 0.5 * (wsq_shifted - float(alpha @ (alpha * shift))) + float(C_i @ (xi * xi))
    else:
        primal = 0.5 * wsq_shifted + float(C_i @ xi)
    return primal - dual


def estimate_margin(
    d: LabeledDataset,
    kernel: KernelSpec,
    tolerance: float = 1e-4,
    max_passes: int = 2_000_000,
) -> float:
    """Geometric margin 1/||w|| of the hard-margin solution.

    Raises :class:`NonSeparableError` when the hard-margin problem does not
    converge or leaves residual slack (the data is not separable under the
    given kernel).
    """
    d.require_two_classes()
    cfg = TrainConfig(C=1e12, weight_ratio=1.0, loss="l1", tolerance=tolerance, max_passes=max_passes)
    try:
        model = train(d, kernel, cfg)
    except ConvergenceError as exc:
        raise NonSeparableError(f"hard-margin training did not converge: {exc}") from exc
    if model.slack_norm_sq > 1e-6:
        raise NonSeparableError(f"residual slack {model.slack_norm_sq:.3e}; data is not separable")
    wsq = model.weight_norm_sq()
    if wsq <= 0:
        raise NonSeparableError("degenerate separator")
    return 1.0 / math.sqrt(wsq)


# --- serialization ---------------------------------------------------------


def model_to_json(m: SvmModel) -> str:
    """Stable JSON schema: kernel, bias, sparse support vectors with labels
    and dual coefficients, slack diagnostic, and the degenerate flag."""
    svs = []
    for k in range(m.n_support):
        fv = FeatureVector.from_dense(m.support_vectors[k])
        svs.append(
            {
                "index": int(m.support_indices[k]),
                "label": int(m.support_labels[k]),
                "alpha": float(m.alphas[k]),
                "features": {str(i): v for i, v in zip(fv.indices, fv.values)},
            }
        )
    doc = {
        "kernel": {"kind": m.kernel.kind, "sigma_sq": m.kernel.sigma_sq},
        "bias": m.bias,
        "dimension": m.dimension,
        "slack_norm_sq": m.slack_norm_sq,
        "degenerate": m.degenerate,
        "constant_label": m.constant_label,
        "support_vectors": svs,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text: Union[str, bytes]) -> SvmModel:
    doc = json.loads(text)
    kernel = KernelSpec(kind=doc["kernel"]["kind"], sigma_sq=doc["kernel"]["sigma_sq"])
    dim = int(doc["dimension"])
    svs = doc["support_vectors"]
    X = np.zeros((len(svs), dim))
    labels = np.zeros(len(svs), dtype=np.int64)
    alphas = np.zeros(len(svs))
    index = np.zeros(len(svs), dtype=np.int64)
    for k, sv in enumerate(svs):
        labels[k] = sv["label"]
        alphas[k] = sv["alpha"]
        index[k] = sv["index"]
        for i_s, v in sv["features"].items():
            X[k, int(i_s) - 1] = v
    return SvmModel(
        kernel=kernel,
        support_vectors=X,
        support_labels=labels,
        support_indices=index,
        alphas=alphas,
        bias=float(doc["bias"]),
        slack_norm_sq=float(doc["slack_norm_sq"]),
        dimension=dim,
        degenerate=bool(doc["degenerate"]),
        constant_label=int(doc["constant_label"]),
    )
