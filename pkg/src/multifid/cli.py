"""Command-line interface.

Exit codes: 0 on success, 2 for configuration errors (bad flags, malformed
JSON/CSV, out-of-domain inputs), 3 for numeric failures.  All randomness
flows from the --seed flag or the seeds recorded in spec/config files, so
repeating an invocation reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys

from .datagen.dataset import BENCHMARKS, generate_dataset, read_dataset, write_dataset
from .errors import (ConfigError, DatasetFormatError, DomainError, MultifidError,
                     NumericError)
from .experiment import ExperimentSpec, make_finetune_objective, prop1_check, run_experiment
from .fusion import VARIANTS, FinetuneConfig, load_model, save_model, train_variant
from .hpo import STRATEGIES, SearchSpace, StudyLimits, run_study, write_study_csv
from .metrics import r_squared, rmse
from .training import TrainConfig

_TRAIN_CONFIG_KEYS = ("pretrain", "finetune", "n_cells")
_SPACE_KEYS = ("params", "budget", "eta", "seed", "report_every", "n_cells", "pretrain")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")


def _cmd_gen_data(args):
    ds = generate_dataset(args.benchmark, args.n_lf, args.n_hf, args.n_test, args.seed)
    write_dataset(ds, args.out)
    print(f"wrote {ds.benchmark} dataset ({ds.lowest.n} low / {ds.highest.n} high"
          f" / {args.n_test} test) to {args.out}")
    return 0


def _parse_train_config(path):
    doc = _load_json(path) if path else {}
    unknown = sorted(set(doc) - set(_TRAIN_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown train config keys: {unknown}")
    pretrain = TrainConfig.from_json(doc.get("pretrain", {}))
    finetune = FinetuneConfig.from_json(doc.get("finetune", {}))
    return pretrain, finetune, int(doc.get("n_cells", 3))


def _cmd_train(args):
    data = read_dataset(args.data)
    pretrain, finetune, n_cells = _parse_train_config(args.config)
    model = train_variant(args.variant, data, pretrain, finetune, n_cells)
    save_model(model, args.out)
    print(f"trained {args.variant} model on {args.data}, saved to {args.out}")
    return 0


def _cmd_eval(args):
    model = load_model(args.model)
    data = read_dataset(args.data)
    if data.test_x is None:
        raise ConfigError(f"dataset {args.data} has no test split")
    pred = model.predict(data.test_x)
    rows = [("rmse", rmse(pred, data.test_y))]
    try:
        rows.append(("r_squared", r_squared(pred, data.test_y)))
    except ConfigError:
        pass
    with open(args.metrics, "w", newline="\n") as fh:
        fh.write("metric,value\n")
        for name, value in rows:
            fh.write(f"{name},{format(value, '.17g')}\n")
    print("eval: " + ", ".join(f"{n}={v:.6g}" for n, v in rows))
    return 0


def _cmd_hpo(args):
    doc = _load_json(args.space)
    unknown = sorted(set(doc) - set(_SPACE_KEYS))
    if unknown:
        raise ConfigError(f"unknown search space keys: {unknown}")
    if "params" not in doc:
        raise ConfigError("search space JSON needs a 'params' object")
    space = SearchSpace(doc["params"])
    limits = StudyLimits(max_budget=int(doc.get("budget", 81)),
                         eta=int(doc.get("eta", 3)),
                         seed=int(doc.get("seed", 0)),
                         report_every=int(doc.get("report_every", 5)))
    data = read_dataset(args.data)
    pretrain = TrainConfig.from_json(doc.get("pretrain", {}))
    objective = make_finetune_objective(data, pretrain,
                                        n_cells=int(doc.get("n_cells", 3)),
                                        split_seed=limits.seed,
                                        report_every=limits.report_every)
    result = run_study(objective, args.strategy, space, limits)
    write_study_csv(result, args.out)
    print(f"{args.strategy}: best value {result.best_value:.6g} at "
          f"{result.best_config} (budget {result.total_budget})")
    return 0


def _cmd_curve(args):
    spec = ExperimentSpec.from_json(_load_json(args.spec))
    curve = run_experiment(spec, args.out)
    for n_hf, (mean, std) in curve.aggregate().items():
        print(f"n_hf={n_hf}: rmse {mean:.6g} +/- {std:.6g}")
    return 0


def _cmd_prop1(args):
    rows = prop1_check(args.out)
    for seed, rate, loss_alt, loss_joint, gap in rows:
        print(f"seed={seed} rate={rate:g}: alternate {loss_alt:.6g}, "
              f"joint {loss_joint:.6g}, gap {gap:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multifid",
                                     description="multi-fidelity surrogate toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a two-fidelity dataset")
    p.add_argument("--benchmark", required=True, choices=BENCHMARKS)
    p.add_argument("--n-lf", type=int, required=True)
    p.add_argument("--n-hf", type=int, required=True)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="train one model variant on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--config", default=None, help="JSON with pretrain/finetune/n_cells")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset's test split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--metrics", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("hpo", help="hyperparameter search with pruning")
    p.add_argument("--data", required=True)
    p.add_argument("--space", required=True, help="JSON search space")
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_hpo)

    p = sub.add_parser("curve", help="run a seeded error-versus-samples experiment")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_curve)

    p = sub.add_parser("prop1-check", help="alternate-versus-joint equivalence experiment")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_prop1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DomainError, DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MultifidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
