"""Benchmark harness: corruption sweeps, baselines, and report emission.

A sweep runs every cell of (beta x rho x alpha x method) for a number of
repeats, corrupting the clean data freshly per repeat, then training the
requested method and scoring (a) recovery of the clean training labels and
(b) held-out metrics when a test set is supplied.  All randomness is derived
from the master seed and the cell coordinates, so reruns are byte-identical
(wall-clock timings are written to a separate file).
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .corruption import CorruptionSpec, corrupt
from .dataset import LabeledDataset, class_stats, load_libsvm
from .ensemble import (
    EnsembleConfig,
    EnsembleModel,
    correct,
    default_subsample_size,
    member_vote_matrix,
    train_ensemble,
)
from .metrics import MetricError, metrics_report, recovery_rate
from .sampling import SamplerConfig, bootstrap_sample, derive_seed
from .svm import KernelSpec, SvmModel, TrainConfig, decision_values, predict_labels, train
from .synth import SynthSpec, generate

__all__ = [
    "SvmParams",
    "ExperimentSpec",
    "ExperimentReport",
    "METHODS",
    "UNIFORM_P",
    "train_baseline",
    "run_experiment",
    "emit_report",
    "CV_GRID",
]

METHODS = ("subsvms", "single_svm", "bag_svm", "cv_svm")

# sentinel for "sample uniformly", i.e. match p to the corrupted minority fraction
UNIFORM_P = "uniform"

# coarse cross-validation grid: penalty, class-weight ratio, and the rbf
# width as gamma = scale / dimension
CV_GRID = {
    "C": (1.0, 10.0, 100.0),
    "weight_ratio": (0.1, 1.0, 10.0),
    "gamma_scale": (0.1, 1.0, 10.0),
}


@dataclass(frozen=True)
class SvmParams:
    """Base-learner settings shared by all methods.

    ``sigma_sq`` of None picks the LIBSVM-style default width for the rbf
    kernel, exp(-||x-z||^2 / dimension), i.e. sigma_sq = dimension / 2.
    """

    kernel_kind: str = "rbf"
    sigma_sq: float | None = None
    C: float = 100.0
    weight_ratio: float = 1.0
    loss: str = "l2"
    tolerance: float = 1e-3

    def kernel(self, dimension: int) -> KernelSpec:
        if self.kernel_kind == "linear":
            return KernelSpec(kind="linear")
        if self.sigma_sq is None:
            return KernelSpec.rbf_from_gamma(1.0 / dimension)
        return KernelSpec(kind="rbf", sigma_sq=self.sigma_sq)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            C=self.C,
            weight_ratio=self.weight_ratio,
            loss=self.loss,
            tolerance=self.tolerance,
        )


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: dataset source, corruption grid, methods, and scale knobs."""

    train_path: str | None = None
    test_path: str | None = None
    synth_dimension: int = 2
    synth_n_points: int = 1000
    synth_mean_distance: float = 2.0
    synth_covariance_scale: float = 0.1
    synth_enforced_margin: float = 0.2
    beta_grid: tuple[float, ...] = (0.25,)
    rho_grid: tuple[float, ...] = (0.75,)
    alpha_grid: tuple[float, ...] = (0.0, 0.5, 1.0)
    flip_convention: str = "appendix"
    methods: tuple[str, ...] = ("subsvms",)
    svm: SvmParams = SvmParams()
    sampling_p: float | str = 0.5  # a float, or UNIFORM_P for p = observed minority fraction
    subsample_size: int | None = None  # None: ceil(log^2 n)
    n_members: int = 128
    tie_rule: str = "keep_observed"
    bag_members: int = 15
    repeats: int = 5
    master_seed: int = 0

    def __post_init__(self):
        if not self.rho_grid or not self.alpha_grid:
            raise ValueError("rho and alpha grids must be nonempty")
        if self.train_path is None and not self.beta_grid:
            raise ValueError("beta grid must be nonempty for synthetic sweeps")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        if isinstance(self.sampling_p, str) and self.sampling_p != UNIFORM_P:
            raise ValueError(f"sampling_p must be a float or {UNIFORM_P!r}")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        doc = json.loads(text)
        if "svm" in doc and isinstance(doc["svm"], dict):
            doc["svm"] = SvmParams(**doc["svm"])
        for key in ("beta_grid", "rho_grid", "alpha_grid", "methods"):
            if key in doc and isinstance(doc[key], list):
                doc[key] = tuple(doc[key])
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list[dict] = field(default_factory=list)
    timing_rows: list[dict] = field(default_factory=list)
    version: str = __version__

    @property
    def all_ok(self) -> bool:
        return all(row["status"] == "ok" for row in self.rows)


@dataclass(frozen=True)
class _VoteBundle:
    """Bootstrap-bagged models sharing the majority-vote machinery."""

    models: tuple[SvmModel, ...]

    @property
    def n_members(self) -> int:
        return len(self.models)


def _cv_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    return [order[i::k] for i in range(k)]


def _cv_bac(d_hat: LabeledDataset, kernel: KernelSpec, cfg: TrainConfig, seed: int) -> float:
    from .metrics import bac, confusion

    folds = _cv_folds(d_hat.n_points, 4, seed)
    scores = []
    for i, fold in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        held = d_hat.labels[fold]
        if np.all(held == held[0]) or np.all(d_hat.labels[train_idx] == d_hat.labels[train_idx][0]):
            continue
        model = train(d_hat, kernel, cfg, indices=train_idx)
        preds = predict_labels(model, d_hat.features[fold])
        try:
            scores.append(bac(confusion(preds, held)))
        except MetricError:
            continue
    return float(np.mean(scores)) if scores else 0.0


def train_baseline(
    d_hat: LabeledDataset, method: str, params: SvmParams, seed: int, bag_members: int = 15
):
    """Train one of the reference methods on (corrupted) data.

    ``single_svm`` trains one SVM at the given parameters; ``bag_svm`` bags
    ``bag_members`` SVMs on full-size bootstrap resamples under majority
    vote; ``cv_svm`` picks parameters by 4-fold cross-validated balanced
    accuracy over a coarse grid, then retrains on all points.  Returns
    ``(predictor, info)``.
    """
    dim = d_hat.dimension
    if method == "single_svm":
        model = train(d_hat, params.kernel(dim), params.train_config())
        return model, {}
    if method == "bag_svm":
        models = []
        for j in range(bag_members):
            idx = bootstrap_sample(d_hat, d_hat.n_points, derive_seed(seed, "bag", j))
            models.append(train(d_hat, params.kernel(dim), params.train_config(), indices=idx))
        return _VoteBundle(tuple(models)), {}
    if method == "cv_svm":
        gamma_scales = CV_GRID["gamma_scale"] if params.kernel_kind == "rbf" else (1.0,)
        best = None
        for C in CV_GRID["C"]:
            for W in CV_GRID["weight_ratio"]:
                for scale in gamma_scales:
                    kernel = (
                        KernelSpec.rbf_from_gamma(scale / dim)
                        if params.kernel_kind == "rbf"
                        else KernelSpec(kind="linear")
                    )
                    cfg = TrainConfig(
                        C=C, weight_ratio=W, loss=params.loss, tolerance=params.tolerance
                    )
                    score = _cv_bac(d_hat, kernel, cfg, derive_seed(seed, "cvfold"))
                    key = (score, -C, -W)
                    if best is None or key > best[0]:
                        best = (key, kernel, cfg, {"C": C, "weight_ratio": W, "sigma_sq": kernel.sigma_sq if kernel.kind == "rbf" else None, "cv_bac": score})
        _, kernel, cfg, info = best
        model = train(d_hat, kernel, cfg)
        return model, info
    raise ValueError(f"unknown baseline {method!r}")


def _predict_any(predictor, X) -> np.ndarray:
    if isinstance(predictor, (EnsembleModel, _VoteBundle)):
        votes = member_vote_matrix(predictor, X)
        pos = (votes == 1).sum(axis=0)
        return np.where(2 * pos >= predictor.n_members, 1, -1).astype(np.int64)
    return predict_labels(predictor, X)


def _score_any(predictor, X) -> np.ndarray:
    if isinstance(predictor, (EnsembleModel, _VoteBundle)):
        votes = member_vote_matrix(predictor, X)
        return (votes == 1).sum(axis=0) / predictor.n_members
    return decision_values(predictor, X)


_METRIC_NAMES = ("recovery", "accuracy", "bac", "sif", "auc")

CSV_COLUMNS = (
    "beta",
    "rho",
    "alpha",
    "method",
    "repeat",
    "status",
    "n_flipped",
    "n_changed",
    "recovery",
    "accuracy",
    "bac",
    "sif",
    "auc",
    "recovery_std",
    "recovery_min",
    "accuracy_std",
    "accuracy_min",
    "bac_std",
    "bac_min",
    "sif_std",
    "sif_min",
    "auc_std",
    "auc_min",
)


def _clean_data_for_beta(spec: ExperimentSpec, beta: float) -> LabeledDataset:
    synth = SynthSpec(
        dimension=spec.synth_dimension,
        n_points=spec.synth_n_points,
        beta=beta,
        mean_distance=spec.synth_mean_distance,
        covariance_scale=spec.synth_covariance_scale,
        enforced_margin=spec.synth_enforced_margin,
        seed=derive_seed(spec.master_seed, "clean", beta),
    )
    return generate(synth)


def _run_cell_repeat(
    spec: ExperimentSpec,
    d_clean: LabeledDataset,
    d_test: LabeledDataset | None,
    beta: float,
    rho: float,
    alpha: float,
    method: str,
    repeat: int,
) -> tuple[dict, float]:
    c_spec = CorruptionSpec(
        rho=rho,
        alpha=alpha,
        seed=derive_seed(spec.master_seed, "corrupt", beta, rho, alpha, repeat),
        convention=spec.flip_convention,
    )
    d_hat, c_report = corrupt(d_clean, c_spec)
    method_seed = derive_seed(spec.master_seed, "method", method, beta, rho, alpha, repeat)

    t0 = time.perf_counter()
    n_changed = None
    if method == "subsvms":
        if spec.sampling_p == UNIFORM_P:
            p_eff = class_stats(d_hat).beta
        else:
            p_eff = float(spec.sampling_p)
        s_eff = (
            spec.subsample_size
            if spec.subsample_size is not None
            else default_subsample_size(d_hat.n_points)
        )
        cfg = EnsembleConfig(
            n_members=spec.n_members,
            sampler=SamplerConfig(p=p_eff, s=s_eff, seed=method_seed),
            kernel=spec.svm.kernel(d_hat.dimension),
            train=spec.svm.train_config(),
            tie_rule=spec.tie_rule,
        )
        ens = train_ensemble(d_hat, cfg)
        result = correct(d_hat, ens)
        train_time = time.perf_counter() - t0
        recov = recovery_rate(result.corrected, d_clean)
        n_changed = result.n_changed
        predictor = ens
    else:
        predictor, _info = train_baseline(
            d_hat, method, spec.svm, method_seed, bag_members=spec.bag_members
        )
        train_time = time.perf_counter() - t0
        train_preds = _predict_any(predictor, d_clean.features)
        recov = float(np.mean(train_preds == d_clean.labels))

    row = {
        "beta": beta,
        "rho": rho,
        "alpha": alpha,
        "method": method,
        "repeat": repeat,
        "status": "ok",
        "n_flipped": c_report.n_flipped,
        "n_changed": n_changed,
        "recovery": recov,
        "accuracy": None,
        "bac": None,
        "sif": None,
        "auc": None,
    }
    if d_test is not None:
        preds = _predict_any(predictor, d_test.features)
        scores = _score_any(predictor, d_test.features)
        rep = metrics_report(preds, d_test.labels, scores=scores)
        row.update(accuracy=rep.accuracy, bac=rep.bac, sif=rep.sif, auc=rep.auc)
    return row, train_time


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Execute the sweep.  Failures are recorded per cell-repeat (status
    column) without aborting the rest of the sweep."""
    report = ExperimentReport(spec=spec)

    if spec.train_path is not None:
        d_clean_file = load_libsvm(spec.train_path)
        beta_values = (class_stats(d_clean_file).beta,)
    else:
        d_clean_file = None
        beta_values = spec.beta_grid
    d_test = load_libsvm(spec.test_path) if spec.test_path else None

    for beta in beta_values:
        d_clean = d_clean_file if d_clean_file is not None else _clean_data_for_beta(spec, beta)
        for rho in spec.rho_grid:
            for alpha in spec.alpha_grid:
                for method in spec.methods:
                    cell_rows = []
                    for repeat in range(spec.repeats):
                        try:
                            row, train_time = _run_cell_repeat(
                                spec, d_clean, d_test, beta, rho, alpha, method, repeat
                            )
                        except Exception as exc:  # recorded, sweep continues
                            row = {
                                "beta": beta,
                                "rho": rho,
                                "alpha": alpha,
                                "method": method,
                                "repeat": repeat,
                                "status": f"error: {exc}",
                                "n_flipped": None,
                                "n_changed": None,
                                "recovery": None,
                                "accuracy": None,
                                "bac": None,
                                "sif": None,
                                "auc": None,
                            }
                            train_time = None
                        cell_rows.append(row)
                        report.timing_rows.append(
                            {
                                "beta": beta,
                                "rho": rho,
                                "alpha": alpha,
                                "method": method,
                                "repeat": repeat,
                                "train_seconds": train_time,
                            }
                        )
                    report.rows.extend(cell_rows)
                    report.rows.append(_aggregate_row(cell_rows))
    return report


def _aggregate_row(cell_rows: list[dict]) -> dict:
    first = cell_rows[0]
    agg = {
        "beta": first["beta"],
        "rho": first["rho"],
        "alpha": first["alpha"],
        "method": first["method"],
        "repeat": "aggregate",
        "status": "ok" if all(r["status"] == "ok" for r in cell_rows) else "partial",
        "n_flipped": first["n_flipped"],
        "n_changed": None,
    }
    for name in _METRIC_NAMES:
        vals = [r[name] for r in cell_rows if r[name] is not None]
        if vals:
            agg[name] = float(np.mean(vals))
            agg[f"{name}_std"] = float(np.std(vals))
            agg[f"{name}_min"] = float(np.min(vals))
        else:
            agg[name] = None
            agg[f"{name}_std"] = None
            agg[f"{name}_min"] = None
    return agg


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report: ExperimentReport, out_dir, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write ``results.csv`` (deterministic), ``timings.csv`` (wall clock),
    and ``report.json`` (rows plus full provenance) under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        results = out / "results.csv"
        with open(results, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in report.rows:
                fh.write(",".join(_csv_cell(row.get(col)) for col in CSV_COLUMNS) + "\n")
        written.append(results)
        timings = out / "timings.csv"
        with open(timings, "w", encoding="utf-8", newline="\n") as fh:
            cols = ("beta", "rho", "alpha", "method", "repeat", "train_seconds")
            fh.write(",".join(cols) + "\n")
            for row in report.timing_rows:
                fh.write(",".join(_csv_cell(row.get(col)) for col in cols) + "\n")
        written.append(timings)
    if "json" in formats:
        doc = {
            "version": report.version,
            "spec": dataclasses.asdict(report.spec),
            "rows": report.rows,
            "all_ok": report.all_ok,
        }
        path = out / "report.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
