"""Command-line surface: synth, corrupt, correct, train, eval, bounds, bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds as bounds_mod
from .corruption import CorruptionSpec, corrupt
from .dataset import load_libsvm, write_libsvm
from .ensemble import EnsembleConfig, correct, default_subsample_size, train_ensemble
from .experiment import UNIFORM_P, ExperimentSpec, SvmParams, emit_report, run_experiment
from .metrics import metrics_report
from .sampling import SamplerConfig
from .svm import (
    KernelSpec,
    TrainConfig,
    decision_values,
    model_from_json,
    model_to_json,
    predict_labels,
    train,
)
from .synth import SynthSpec, generate


def _write_output(data: bytes, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(path).write_bytes(data)


def _add_kernel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    p.add_argument("--C", type=float, default=100.0, help="penalty parameter")
    p.add_argument("--W", type=float, default=1.0, help="ratio of positive/negative class penalties")
    p.add_argument(
        "--sigma-sq",
        type=float,
        default=None,
        help="rbf width in exp(-||x-z||^2 / (2 sigma_sq)); default gamma = 1/dimension",
    )
    p.add_argument(
        "--gamma", type=float, default=None, help="alternative rbf parameterization exp(-gamma ||x-z||^2)"
    )
    p.add_argument("--loss", choices=("l1", "l2"), default="l2")
    p.add_argument("--tolerance", type=float, default=1e-3)


def _kernel_from_args(args, dimension: int) -> KernelSpec:
    if args.kernel == "linear":
        return KernelSpec(kind="linear")
    if args.gamma is not None:
        return KernelSpec.rbf_from_gamma(args.gamma)
    if args.sigma_sq is not None:
        return KernelSpec(kind="rbf", sigma_sq=args.sigma_sq)
    return KernelSpec.rbf_from_gamma(1.0 / dimension)


def _train_config_from_args(args) -> TrainConfig:
    return TrainConfig(C=args.C, weight_ratio=args.W, loss=args.loss, tolerance=args.tolerance)


# --- subcommands -----------------------------------------------------------


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        dimension=args.dimension,
        n_points=args.n_points,
        beta=args.beta,
        mean_distance=args.mean_distance,
        covariance_scale=args.covariance_scale,
        enforced_margin=args.margin,
        seed=args.seed,
    )
    _write_output(write_libsvm(generate(spec)), args.output)
    return 0


def _cmd_corrupt(args) -> int:
    d = load_libsvm(args.input)
    spec = CorruptionSpec(
        rho=args.rho, alpha=args.alpha, seed=args.seed, convention=args.flip_convention
    )
    d_hat, report = corrupt(d, spec)
    _write_output(write_libsvm(d_hat), args.output)
    if args.report:
        doc = {
            "rho": args.rho,
            "alpha": args.alpha,
            "seed": args.seed,
            "flip_convention": args.flip_convention,
            "n_flipped": report.n_flipped,
            "n_majority_to_minority": report.n_majority_to_minority,
            "n_minority_to_majority": report.n_minority_to_majority,
            "minority_label": report.minority_label,
            "flipped_indices": [int(i) for i in report.flipped_indices],
            "realized_fractions": report.realized_fractions,
        }
        Path(args.report).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_correct(args) -> int:
    d_hat = load_libsvm(args.input)
    if args.p == "uniform":
        from .dataset import class_stats

        p_eff = class_stats(d_hat).beta
    else:
        p_eff = float(args.p)
    s_eff = args.s if args.s is not None else default_subsample_size(d_hat.n_points)
    tie = "keep_observed" if args.tie == "observed" else "positive"
    cfg = EnsembleConfig(
        n_members=args.J,
        sampler=SamplerConfig(p=p_eff, s=s_eff, seed=args.seed),
        kernel=_kernel_from_args(args, d_hat.dimension),
        train=_train_config_from_args(args),
        tie_rule=tie,
    )
    ens = train_ensemble(d_hat, cfg)
    result = correct(d_hat, ens)
    _write_output(write_libsvm(result.corrected), args.output)
    if args.report:
        doc = {
            "p": p_eff,
            "s": s_eff,
            "n_members": args.J,
            "tie_rule": tie,
            "seed": args.seed,
            "n_changed": result.n_changed,
            "changed_indices": [int(i) for i in result.changed_indices],
            "vote_fraction": [float(v) for v in result.vote_fraction],
            "failed_members": list(ens.failed_members),
        }
        Path(args.report).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.retrain_model:
        model = train(result.corrected, cfg.kernel, cfg.train)
        Path(args.retrain_model).write_text(model_to_json(model) + "\n")
    return 0


def _cmd_train(args) -> int:
    d = load_libsvm(args.input)
    model = train(d, _kernel_from_args(args, d.dimension), _train_config_from_args(args))
    text = model_to_json(model) + "\n"
    _write_output(text.encode(), args.output)
    return 0


def _read_labels(path: str, n_expected: int) -> np.ndarray:
    text = Path(path).read_text()
    first = text.lstrip().split(None, 1)[0] if text.strip() else ""
    if ":" in text and not first.lstrip("+-").replace(".", "").isdigit():
        raise ValueError("unrecognized prediction file format")
    if ":" in text:
        # a LIBSVM file; use its labels
        from .dataset import parse_libsvm

        return parse_libsvm(text).labels
    vals = [int(float(tok)) for tok in text.split()]
    if len(vals) != n_expected:
        raise ValueError(f"expected {n_expected} predictions, got {len(vals)}")
    return np.array([1 if v > 0 else -1 for v in vals], dtype=np.int64)


def _cmd_eval(args) -> int:
    truth = load_libsvm(args.truth)
    if args.model:
        model = model_from_json(Path(args.model).read_text())
        preds = predict_labels(model, truth.features)
        scores = decision_values(model, truth.features)
    else:
        preds = _read_labels(args.pred, truth.n_points)
        scores = None
    if args.scores:
        scores = np.array([float(t) for t in Path(args.scores).read_text().split()])
    rep = metrics_report(preds, truth.labels, scores=scores)
    doc = rep.to_dict()
    if args.format == "json":
        out = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        keys = sorted(doc)
        out = ",".join(keys) + "\n" + ",".join("" if doc[k] is None else repr(doc[k]) for k in keys) + "\n"
    _write_output(out.encode(), args.output)
    return 0


# --- bounds subcommand -----------------------------------------------------

_INT_PARAMS = {"r", "s", "n", "J"}

# op name -> (required params, optional params with defaults, evaluator)
_BOUNDS_OPS = {
    "generalization": (
        ("n", "radius", "margin", "delta"),
        {"slack_norm_sq": 0.0, "c": 1.0},
        lambda v: _as_dict(
            bounds_mod.generalization_bound(
                v["n"], v["radius"], v["margin"], v["slack_norm_sq"], v["delta"], v["c"]
            )
        ),
    ),
    "epsilon": (
        ("r", "s", "delta", "theta", "radius", "margin"),
        {"c": 1.0, "rho": 0.0, "beta": 0.25, "p": 0.5},
        lambda v: _as_dict(bounds_mod.epsilon_bound(_inputs(v))),
    ),
    "translate": (
        ("epsilon", "p"),
        {},
        lambda v: {"value": bounds_mod.translate_error_rate(v["epsilon"], v["p"])},
    ),
    "phi": (
        ("epsilon", "p", "rho", "beta", "eta", "delta"),
        {},
        lambda v: _as_dict(
            bounds_mod.phi(v["epsilon"], v["p"], v["rho"], v["beta"], v["eta"], v["delta"])
        ),
    ),
    "vote": (
        ("phi", "J"),
        {},
        lambda v: _as_dict(bounds_mod.vote_error_bound(v["phi"], v["J"])),
    ),
    "budget": (
        ("r", "s", "delta", "theta", "radius", "margin", "p", "eta"),
        {"c": 1.0, "rho": 0.0, "beta": 0.25},
        lambda v: _as_dict(bounds_mod.rho_beta_budget(_inputs(v), v["eta"])),
    ),
    "budget-subbagging": (
        ("r", "delta", "theta", "radius", "margin", "p", "eta"),
        {"c": 1.0, "rho": 0.0, "beta": 0.25, "s": None},
        lambda v: {
            "value": bounds_mod.rho_beta_budget_subbagging(
                _inputs({**v, "s": v["s"] if v["s"] else v["r"]}), v["eta"]
            )
        },
    ),
    "clean-probs": (
        ("beta", "rho", "alpha", "p"),
        {},
        lambda v: dict(
            zip(
                ("p_clean_minority", "p_clean_majority"),
                bounds_mod.clean_point_probs(v["beta"], v["rho"], v["alpha"], v["p"]),
            )
        ),
    ),
    "worst-clean-probs": (
        ("rho", "p"),
        {},
        lambda v: dict(
            zip(
                ("p_clean_minority", "p_clean_majority"),
                bounds_mod.worst_case_clean_probs(v["rho"], v["p"]),
            )
        ),
    ),
    "eta-exact": (
        ("s", "r", "q_a", "q_b"),
        {},
        lambda v: _as_dict(bounds_mod.eta_exact(v["s"], v["r"], v["q_a"], v["q_b"])),
    ),
    "eta-hoeffding": (
        ("s", "r", "rho", "p"),
        {},
        lambda v: _as_dict(bounds_mod.eta_hoeffding(v["s"], v["r"], v["rho"], v["p"])),
    ),
    "eta-surrogate": (
        ("p", "s", "r", "rho"),
        {},
        lambda v: {"value": bounds_mod.eta_surrogate(v["p"], v["s"], v["r"], v["rho"])},
    ),
    "s-min-main": (("r",), {}, lambda v: {"value": bounds_mod.s_min_main(v["r"])}),
    "s-min-appendix": (
        ("r", "rho"),
        {},
        lambda v: {"value": bounds_mod.s_min_appendix(v["r"], v["rho"])},
    ),
    "s-min-hessian": (
        ("r", "rho"),
        {},
        lambda v: {"value": bounds_mod.s_min_hessian(v["r"], v["rho"])},
    ),
    "chain": (
        ("r", "s", "delta", "theta", "rho", "beta", "p", "radius", "margin"),
        {"c": 1.0, "J": 1000},
        lambda v: bounds_mod.evaluate_chain(_inputs(v)),
    ),
}


def _inputs(v: dict) -> bounds_mod.BoundsInput:
    return bounds_mod.BoundsInput(
        r=v["r"],
        delta=v["delta"],
        theta=v.get("theta", 0.1),
        rho=v.get("rho", 0.0),
        beta=v.get("beta", 0.25),
        s=v["s"],
        p=v.get("p", 0.5),
        radius=v["radius"],
        margin=v["margin"],
        c=v.get("c", 1.0),
        n_members=v.get("J", 1000),
    )


def _as_dict(obj) -> dict:
    import dataclasses

    return {
        k: (float(x) if isinstance(x, (bool, np.bool_)) else x)
        for k, x in dataclasses.asdict(obj).items()
    }


def _cmd_bounds(args) -> int:
    if args.op not in _BOUNDS_OPS:
        print(f"unknown bounds op {args.op!r}; choose from {', '.join(sorted(_BOUNDS_OPS))}", file=sys.stderr)
        return 2
    required, optional, fn = _BOUNDS_OPS[args.op]
    values: dict = dict(optional)
    for pair in args.set or []:
        name, _, raw = pair.partition("=")
        if not raw:
            print(f"--set expects name=value, got {pair!r}", file=sys.stderr)
            return 2
        values[name] = int(raw) if name in _INT_PARAMS else float(raw)
    missing = [name for name in required if name not in values]
    sweep = None
    if args.sweep:
        name, _, rng = args.sweep.partition("=")
        lo_s, hi_s, n_s = rng.split(":")
        sweep = (name, float(lo_s), float(hi_s), int(n_s))
        missing = [m for m in missing if m != name]
    if missing:
        print(f"missing parameters for {args.op}: {', '.join(missing)} (use --set name=value)", file=sys.stderr)
        return 2

    if sweep is None:
        result = fn(values)
        out = json.dumps(result, indent=2, sort_keys=True) + "\n"
        _write_output(out.encode(), args.output)
        return 0

    name, lo, hi, count = sweep
    grid = np.linspace(lo, hi, count)
    rows = []
    for x in grid:
        v = dict(values)
        v[name] = int(round(x)) if name in _INT_PARAMS else float(x)
        rows.append((v[name], fn(v)))
    keys = sorted(rows[0][1])
    lines = [",".join([name] + keys)]
    for x, result in rows:
        lines.append(",".join([repr(x)] + [repr(result[k]) for k in keys]))
    _write_output(("\n".join(lines) + "\n").encode(), args.output)
    return 0


def _cmd_bench(args) -> int:
    if args.config:
        spec = ExperimentSpec.from_json(Path(args.config).read_text())
    else:
        spec = ExperimentSpec()
    overrides: dict = {}
    if args.train:
        overrides["train_path"] = args.train
    if args.test:
        overrides["test_path"] = args.test
    if args.methods:
        overrides["methods"] = tuple(args.methods.split(","))
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.J is not None:
        overrides["n_members"] = args.J
    if args.s is not None:
        overrides["subsample_size"] = args.s
    if args.p is not None:
        overrides["sampling_p"] = UNIFORM_P if args.p == "uniform" else float(args.p)
    if args.rho_grid:
        overrides["rho_grid"] = tuple(float(x) for x in args.rho_grid.split(","))
    if args.alpha_grid:
        overrides["alpha_grid"] = tuple(float(x) for x in args.alpha_grid.split(","))
    if args.beta_grid:
        overrides["beta_grid"] = tuple(float(x) for x in args.beta_grid.split(","))
    if args.flip_convention:
        overrides["flip_convention"] = args.flip_convention
    if args.kernel or args.C is not None or args.sigma_sq is not None or args.loss:
        svm_kw = {}
        if args.kernel:
            svm_kw["kernel_kind"] = args.kernel
        if args.C is not None:
            svm_kw["C"] = args.C
        if args.W is not None:
            svm_kw["weight_ratio"] = args.W
        if args.sigma_sq is not None:
            svm_kw["sigma_sq"] = args.sigma_sq
        if args.loss:
            svm_kw["loss"] = args.loss
        overrides["svm"] = SvmParams(**{**spec.svm.__dict__, **svm_kw})
    if args.paper_scale:
        overrides.setdefault("n_members", 1000)
        overrides.setdefault("repeats", 10)
        overrides.setdefault("alpha_grid", (0.0, 0.25, 0.5, 0.75, 1.0))
    if overrides:
        spec = ExperimentSpec(**{**spec.__dict__, **overrides})

    report = run_experiment(spec)
    written = emit_report(report, args.out)
    for path in written:
        print(path)
    return 0 if report.all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsvms", description=__doc__)
    parser.add_argument("--version", action="version", version=f"subsvms {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate margin-enforced two-Gaussian data")
    p.add_argument("--dimension", "-d", type=int, default=2)
    p.add_argument("--n-points", "-n", type=int, default=1000)
    p.add_argument("--beta", type=float, default=0.25, help="minority fraction")
    p.add_argument("--mean-distance", type=float, default=2.0)
    p.add_argument("--covariance-scale", type=float, default=0.1)
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("corrupt", help="flip labels adversarially")
    p.add_argument("input")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flip-convention", choices=("appendix", "experiment"), default="appendix")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--report", default=None, help="write a JSON corruption report here")
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("correct", help="error-correct labels by subsampled bagging")
    p.add_argument("input")
    p.add_argument("--p", default="0.5", help="minority-pick probability, or 'uniform'")
    p.add_argument("--s", type=int, default=None, help="subsample size; default ceil(log^2 n)")
    p.add_argument("--J", type=int, default=128, help="ensemble size")
    p.add_argument("--tie", choices=("observed", "positive"), default="observed")
    p.add_argument("--seed", type=int, default=0)
    _add_kernel_args(p)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--report", default=None, help="write a JSON correction report here")
    p.add_argument("--retrain-model", default=None, help="retrain one SVM on the corrected data and save it here")
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("train", help="train a single SVM and save it as JSON")
    p.add_argument("input")
    _add_kernel_args(p)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score predictions against labeled truth")
    p.add_argument("--truth", required=True, help="LIBSVM file with true labels")
    p.add_argument("--pred", default=None, help="predictions: labels file or LIBSVM file")
    p.add_argument("--model", default=None, help="model JSON; predicts the truth features")
    p.add_argument("--scores", default=None, help="optional real-valued scores for AUC")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bounds", help="evaluate tolerance-bound formulas")
    p.add_argument("op", help=f"one of: {', '.join(sorted(_BOUNDS_OPS))}")
    p.add_argument("--set", action="append", metavar="NAME=VALUE", help="set a parameter")
    p.add_argument("--sweep", default=None, metavar="NAME=LO:HI:N", help="sweep one parameter, emit CSV")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("bench", help="run a corruption/correction benchmark sweep")
    p.add_argument("--config", default=None, help="ExperimentSpec JSON file")
    p.add_argument("--train", default=None, help="training data (LIBSVM); default: synthetic")
    p.add_argument("--test", default=None, help="held-out test data (LIBSVM)")
    p.add_argument("--methods", default=None, help="comma list: subsvms,single_svm,bag_svm,cv_svm")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--J", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--p", default=None)
    p.add_argument("--rho-grid", default=None, help="comma list of rho values")
    p.add_argument("--alpha-grid", default=None, help="comma list of alpha values")
    p.add_argument("--beta-grid", default=None, help="comma list of beta values (synthetic only)")
    p.add_argument("--flip-convention", choices=("appendix", "experiment"), default=None)
    p.add_argument("--kernel", choices=("linear", "rbf"), default=None)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--W", type=float, default=None)
    p.add_argument("--sigma-sq", type=float, default=None)
    p.add_argument("--loss", choices=("l1", "l2"), default=None)
    p.add_argument("--paper-scale", action="store_true", help="full-scale settings (J=1000, 10 repeats, 5 alphas)")
    p.add_argument("--out", default="bench-out", help="output directory")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
