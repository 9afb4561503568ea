"""Error correction for adversarially label-corrupted binary classification.

Train many SVMs on small class-balanced random subsamples of the corrupted
data and relabel every training point by their majority vote; the package
also ships exact evaluators for the tolerance bounds governing when that
works, the corruption process itself, imbalance-aware metrics, and a
benchmark harness.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundsInput,
    BoundValue,
    clean_point_probs,
    epsilon_bound,
    eta_exact,
    eta_hoeffding,
    eta_surrogate,
    evaluate_chain,
    generalization_bound,
    phi,
    rho_beta_budget,
    rho_beta_budget_subbagging,
    s_min_appendix,
    s_min_hessian,
    s_min_main,
    translate_error_rate,
    vote_error_bound,
    worst_case_clean_probs,
)
from .corruption import CorruptionReport, CorruptionSpec, corrupt, theoretical_fractions
from .dataset import (
    ClassStats,
    DatasetError,
    FeatureVector,
    LabeledDataset,
    LibsvmFormatError,
    class_stats,
    estimate_radius,
    load_libsvm,
    parse_libsvm,
    save_libsvm,
    write_libsvm,
)
from .ensemble import (
    CorrectionResult,
    EnsembleConfig,
    EnsembleModel,
    correct,
    default_subsample_size,
    estimate_regularity,
    predict_vote,
    train_ensemble,
    vote_predict_labels,
)
from .experiment import ExperimentSpec, SvmParams, emit_report, run_experiment, train_baseline
from .metrics import (
    Confusion,
    MetricsReport,
    accuracy,
    auc,
    bac,
    confusion,
    metrics_report,
    recovery_rate,
    sif,
)
from .sampling import SamplerConfig, bootstrap_sample, derive_seed, p_biased_sample
from .svm import (
    ConvergenceError,
    KernelSpec,
    NonSeparableError,
    SvmModel,
    TrainConfig,
    decision_value,
    decision_values,
    estimate_margin,
    model_from_json,
    model_to_json,
    predict,
    predict_labels,
    train,
)
from .synth import SynthSpec, generate
