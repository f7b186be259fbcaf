"""Seeded multi-run experiment orchestration.

``run_experiment`` reproduces the error-versus-samples protocol: for every
(seed, n_hf) cell it draws data, trains the requested variant, evaluates on
a held-out test set drawn before any fitting, and emits plot-ready CSVs with
a JSON sidecar carrying the full spec.  High-fidelity training subsets are
nested across n_hf values within a seed, so curves reflect data growth
rather than resampling noise.

Independent cells could run in parallel; aggregation is order-independent.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dag import DagConfig, build_dag
from .datagen.analytic import evaluate_batch, input_spec, sample_inputs
from .datagen.dataset import FidelityDataset, FidelityLevel, generate_dataset, read_dataset
from .datagen.pde import FieldGrid
from .errors import ConfigError
from .fusion import (VARIANTS, FinetuneConfig, build_trans, finetune_trans,
                     pretrain_low, train_variant)
from .metrics import mae_field, rmse
from .training import Normalizer, TrainConfig, alternate_train, joint_train

_SPEC_FIELDS = ("benchmark", "data_dir", "variant", "n_lf", "n_hf_values", "seeds",
                "n_test", "n_cells", "pretrain", "finetune")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one curve."""

    variant: str = "trans"
    benchmark: str = None
    data_dir: str = None
    n_lf: int = 20
    n_hf_values: list = field(default_factory=lambda: [4, 8, 12, 16, 20])
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    n_test: int = 50
    n_cells: int = 3
    pretrain: TrainConfig = field(default_factory=TrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)

    def __post_init__(self):
        if (self.benchmark is None) == (self.data_dir is None):
            raise ConfigError("give exactly one of benchmark or data_dir")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if not self.n_hf_values or min(self.n_hf_values) < 1:
            raise ConfigError("n_hf_values must be positive")

    @classmethod
    def from_json(cls, doc) -> "ExperimentSpec":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        unknown = sorted(set(doc) - set(_SPEC_FIELDS))
        if unknown:
            raise ConfigError(f"unknown experiment spec keys: {unknown}")
        doc = dict(doc)
        if "pretrain" in doc:
            doc["pretrain"] = TrainConfig.from_json(doc["pretrain"])
        if "finetune" in doc:
            doc["finetune"] = FinetuneConfig.from_json(doc["finetune"])
        return cls(**doc)

    def to_doc(self) -> dict:
        return {
            "variant": self.variant,
            "benchmark": self.benchmark,
            "data_dir": self.data_dir,
            "n_lf": self.n_lf,
            "n_hf_values": list(self.n_hf_values),
            "seeds": list(self.seeds),
            "n_test": self.n_test,
            "n_cells": self.n_cells,
            "pretrain": self.pretrain.to_doc(),
            "finetune": self.finetune.to_doc(),
        }


@dataclass
class RmseCurve:
    """Rows of (n_hf, seed, rmse) plus per-n_hf mean and population stddev."""

    rows: list = field(default_factory=list)

    def add(self, n_hf: int, seed: int, value: float):
        self.rows.append((n_hf, seed, value))

    def aggregate(self):
        by_nhf = {}
        for n_hf, _seed, value in self.rows:
            by_nhf.setdefault(n_hf, []).append(value)
        return {n: (float(np.mean(vs)), float(np.std(vs)))
                for n, vs in sorted(by_nhf.items())}

    def mean_at(self, n_hf: int) -> float:
        return self.aggregate()[n_hf][0]


def _seeded_dataset(spec: ExperimentSpec, base: FidelityDataset, seed: int, n_hf_max: int):
    """Per-seed dataset: either freshly generated or a seeded subsample of a
    directory dataset (nested high-fidelity prefix, seeded test split)."""
    if spec.benchmark is not None:
        return generate_dataset(spec.benchmark, spec.n_lf, n_hf_max, spec.n_test, seed)
    high = base.highest
    if n_hf_max > high.n:
        raise ConfigError(f"n_hf={n_hf_max} exceeds the {high.n} stored samples")
    order = np.random.default_rng(seed).permutation(high.n)
    pick = order[:n_hf_max]
    levels = list(base.levels[:-1]) + [FidelityLevel(high.x[pick], high.y[pick])]
    return FidelityDataset(base.benchmark, seed, levels, base.bounds,
                           base.test_x, base.test_y, base.field_shape,
                           base.generator_version, dict(base.extra))


def run_experiment(spec: ExperimentSpec, out_dir=None) -> RmseCurve:
    n_hf_values = sorted(spec.n_hf_values)
    n_hf_max = n_hf_values[-1]
    base = None
    if spec.data_dir is not None:
        base = read_dataset(spec.data_dir)
        if n_hf_max > base.highest.n:
            raise ConfigError(f"spec needs {n_hf_max} high-fidelity samples, "
                              f"dataset has {base.highest.n}")
        if base.test_x is None:
            raise ConfigError("dataset has no held-out test data")
    elif spec.n_lf < n_hf_max:
        raise ConfigError(f"n_lf={spec.n_lf} < largest n_hf={n_hf_max}")

    curve = RmseCurve()
    fields = {}  # n_hf -> list of (pred FieldGrid, truth FieldGrid)
    for seed in spec.seeds:
        data = _seeded_dataset(spec, base, seed, n_hf_max)
        pre_cfg = TrainConfig(**{**spec.pretrain.to_doc(), "seed": seed})
        low = None
        if spec.variant in ("trans", "dmf2", "copy", "low"):
            low = pretrain_low(data, pre_cfg, spec.n_cells)
        for n_hf in n_hf_values:
            sub = data.subset_high(n_hf)
            model = train_variant(spec.variant, sub, pre_cfg, spec.finetune,
                                  spec.n_cells, low=low)
            pred = model.predict(data.test_x)
            curve.add(n_hf, seed, rmse(pred, data.test_y))
            if data.field_shape is not None:
                pairs = fields.setdefault(n_hf, [])
                for p, t in zip(pred, data.test_y):
                    pairs.append((FieldGrid(p.reshape(data.field_shape)),
                                  FieldGrid(t.reshape(data.field_shape))))
    if out_dir is not None:
        _write_artifacts(spec, curve, fields, out_dir)
    return curve


def _write_artifacts(spec, curve, fields, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "curve.csv"), "w", newline="\n") as fh:
        fh.write("n_hf,seed,rmse\n")
        for n_hf, seed, value in curve.rows:
            fh.write(f"{n_hf},{seed},{format(value, '.17g')}\n")
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="\n") as fh:
        fh.write("n_hf,mean_rmse,std_rmse\n")
        for n_hf, (mean, std) in curve.aggregate().items():
            fh.write(f"{n_hf},{format(mean, '.17g')},{format(std, '.17g')}\n")
    with open(os.path.join(out_dir, "spec.json"), "w", newline="\n") as fh:
        json.dump(spec.to_doc(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    for n_hf, pairs in sorted(fields.items()):
        grid = mae_field([p for p, _ in pairs], [t for _, t in pairs])
        path = os.path.join(out_dir, f"mae_field_nhf{n_hf}.csv")
        with open(path, "w", newline="\n") as fh:
            for row in grid.values:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


# ---------------------------------------------------------------------------
# Alternate-versus-joint equivalence experiment.
# ---------------------------------------------------------------------------


def prop1_check(out_csv=None, seeds=(0, 1, 2, 3, 4), rates=(1e-4, 1e-2),
                epochs: int = 2000, n_lf: int = 20):
    """Final-loss gap between the alternate (k = 1) and joint schedules from
    identical initialization on a small low-fidelity problem, per seed and
    learning rate.  Returns rows of (seed, rate, loss_alt, loss_joint, gap)
    where gap = |loss_alt - loss_joint| / loss_joint.
    """
    rows = []
    spec = input_spec("currin")
    for seed in seeds:
        x = sample_inputs(spec, n_lf, seed)
        y = evaluate_batch("currin", x, "low")
        norm = Normalizer.fit(x, y)
        xn, yn = norm.encode_x(x), norm.encode_y(y)
        for rate in rates:
            dag_cfg = DagConfig(3, x.shape[1], y.shape[1])
            net_alt = build_dag(dag_cfg, seed)
            net_joint = build_dag(dag_cfg, seed)
            alt_cfg = TrainConfig(inner_epochs=epochs, alpha_every=1, r1=rate,
                                  r2=rate, seed=seed, mode="alternate")
            joint_cfg = TrainConfig(inner_epochs=epochs, alpha_every=1, r1=rate,
                                    r2=rate, seed=seed, mode="joint")
            loss_alt = alternate_train(net_alt, xn, yn, alt_cfg).total[-1]
            loss_joint = joint_train(net_joint, xn, yn, joint_cfg).total[-1]
            gap = abs(loss_alt - loss_joint) / loss_joint
            rows.append((seed, rate, loss_alt, loss_joint, gap))
    if out_csv is not None:
        with open(out_csv, "w", newline="\n") as fh:
            fh.write("seed,rate,loss_alternate,loss_joint,rel_gap\n")
            for seed, rate, la, lj, gap in rows:
                fh.write(f"{seed},{format(rate, '.17g')},{format(la, '.17g')},"
                         f"{format(lj, '.17g')},{format(gap, '.17g')}\n")
    return rows


# ---------------------------------------------------------------------------
# Objective factory for hyperparameter studies.
# ---------------------------------------------------------------------------


def make_finetune_objective(data: FidelityDataset, pretrain_cfg: TrainConfig,
                            n_cells: int = 3, split_seed: int = 0,
                            report_every: int = 5):
    """Build a study objective over {r1, r2, r3, lambda1, lambda2}.

    The highest fidelity level is split 80/20 (seeded, before any fitting);
    the objective fine-tunes a transfer model for ``budget`` epochs and
    streams the validation RMSE every ``report_every`` epochs.  Low-model
    pretraining depends only on the decay parameters, so pretrained networks
    are cached per (lambda1, lambda2).
    """
    high = data.highest
    if high.n < 2:
        raise ConfigError("need at least 2 high-fidelity samples to split")
    order = np.random.default_rng(split_seed).permutation(high.n)
    n_val = max(1, high.n // 5)
    val_idx, fit_idx = order[:n_val], order[n_val:]
    fit_level = FidelityLevel(high.x[fit_idx], high.y[fit_idx])
    fit_data = FidelityDataset(data.benchmark, data.seed,
                               list(data.levels[:-1]) + [fit_level], data.bounds)
    x_val, y_val = high.x[val_idx], high.y[val_idx]
    cache = {}

    def pretrained(lam1, lam2):
        key = (lam1, lam2)
        if key not in cache:
            cfg = TrainConfig(**{**pretrain_cfg.to_doc(),
                                 "lambda1": lam1, "lambda2": lam2})
            cache[key] = pretrain_low(data, cfg, n_cells)
        return cache[key]

    def objective(config, budget):
        lam1 = float(config.get("lambda1", pretrain_cfg.lambda1))
        lam2 = float(config.get("lambda2", pretrain_cfg.lambda2))
        low = pretrained(lam1, lam2).clone()
        fin = FinetuneConfig(r1=float(config.get("r1", 1e-4)),
                             r2=float(config.get("r2", 1e-4)),
                             r3=float(config.get("r3", 1e-2)),
                             epochs=0)
        model = build_trans(low, fit_level.d)
        done = 0
        while done < budget:
            chunk = min(report_every, budget - done)
            finetune_trans(model, fit_data,
                           FinetuneConfig(r1=fin.r1, r2=fin.r2, r3=fin.r3, epochs=chunk))
            done += chunk
            yield done, rmse(model.predict(x_val), y_val)

    return objective
