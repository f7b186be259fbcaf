"""Loss assembly and the alternate / joint full-batch training loops.

The total objective is

    L = (1/N) sum_i ||y_i - f(x_i)||^2  +  lambda1 ||w||^2  +  lambda2 ||alpha||^2

with the regularizers taken as squared L2 over every entry of the layer-weight
and architecture groups respectively.  Both weights and logits are trained
against this same objective (single-level; no train/validation split inside
the trainer), and every epoch consumes the entire training set.

The alternate schedule steps the layer weights each epoch and the logits only
every k-th epoch, re-evaluating gradients after the weight step so the logit
update sees the already-moved weights.  The joint schedule steps both groups
from one shared gradient evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor, backward, sgd_step
from .dag import DmfNetwork, dag_forward, param_groups
from .errors import ConfigError, NumericError, ShapeMismatch

TRAIN_MODES = ("alternate", "joint")

# Field names accepted by TrainConfig.from_json; the decay fields use the
# ASCII spellings lambda1/lambda2.
_CONFIG_FIELDS = ("outer_iters", "inner_epochs", "alpha_every", "r1", "r2",
                  "lambda1", "lambda2", "seed", "mode")


@dataclass
class TrainConfig:
    """Schedule and rates for one training run."""

    outer_iters: int = 1
    inner_epochs: int = 2000
    alpha_every: int = 5
    r1: float = 0.1
    r2: float = 0.1
    lambda1: float = 1e-6
    lambda2: float = 1e-6
    seed: int = 0
    mode: str = "alternate"

    def __post_init__(self):
        if self.outer_iters < 0 or self.inner_epochs < 0:
            raise ConfigError("iteration counts must be nonnegative")
        if self.alpha_every < 1:
            raise ConfigError("alpha_every must be >= 1")
        if min(self.r1, self.r2, self.lambda1, self.lambda2) < 0:
            raise ConfigError("rates and decays must be nonnegative")
        if self.mode not in TRAIN_MODES:
            raise ConfigError(f"mode must be one of {TRAIN_MODES}, got {self.mode!r}")

    @classmethod
    def from_json(cls, doc) -> "TrainConfig":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if not isinstance(doc, dict):
            raise ConfigError("train config must be a JSON object")
        unknown = sorted(set(doc) - set(_CONFIG_FIELDS))
        if unknown:
            raise ConfigError(f"unknown train config keys: {unknown}")
        return cls(**doc)

    def to_doc(self) -> dict:
        return asdict(self)


@dataclass
class TrainTrace:
    """Per-epoch loss record, evaluated after that epoch's updates."""

    total: list = field(default_factory=list)
    data_term: list = field(default_factory=list)
    w_reg: list = field(default_factory=list)
    a_reg: list = field(default_factory=list)

    def append(self, total, data_term, w_reg, a_reg):
        self.total.append(total)
        self.data_term.append(data_term)
        self.w_reg.append(w_reg)
        self.a_reg.append(a_reg)

    def __len__(self):
        return len(self.total)


def loss_total(net: DmfNetwork, x: Tensor, y, lambda1: float, lambda2: float,
               groups=None) -> Tensor:
    """Build the three-term objective as a graph node (scalar)."""
    if groups is None:
        groups = param_groups(net)
    w_group, a_group = groups
    yd = y.data if isinstance(y, Tensor) else np.asarray(y, dtype=np.float64)
    if x.data.shape[0] != yd.shape[0]:
        raise ShapeMismatch("loss_total", x.data.shape, yd.shape)
    pred = dag_forward(net, x)
    total = ad.mse(pred, yd)
    if lambda1 != 0.0:
        total = ad.add(total, ad.scale(ad.sq_sum_group(w_group.tensors()), lambda1))
    if lambda2 != 0.0:
        total = ad.add(total, ad.scale(ad.sq_sum_group(a_group.tensors()), lambda2))
    return total


def loss_parts(net: DmfNetwork, x: np.ndarray, y: np.ndarray,
               lambda1: float, lambda2: float, groups=None):
    """Tape-free evaluation of (total, data term, ||w||^2, ||alpha||^2)."""
    if groups is None:
        groups = param_groups(net)
    w_group, a_group = groups
    pred = dag_forward(net, Tensor(x)).data
    diff = (pred - y).reshape(-1)
    data_term = diff.dot(diff) / x.shape[0]

    def group_sq(group):
        acc = 0.0
        for t in group.params.values():
            flat = t.data.reshape(-1)
            acc += flat.dot(flat)
        return acc

    w_reg = group_sq(w_group)
    a_reg = group_sq(a_group)
    return data_term + lambda1 * w_reg + lambda2 * a_reg, data_term, w_reg, a_reg


def _check_data(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeMismatch("train data", x.shape, y.shape)
    if x.shape[0] == 0:
        raise ConfigError("training set is empty")
    return x, y


def _check_finite(trace: TrainTrace, cfg: TrainConfig):
    if not np.isfinite(trace.total[-1]):
        raise NumericError(
            f"loss diverged at epoch {len(trace)} (r1={cfg.r1}, r2={cfg.r2}); "
            "lower the learning rates")


def alternate_train(net: DmfNetwork, x, y, cfg: TrainConfig) -> TrainTrace:
    """Alternate schedule: w every epoch at r1, alpha on every k-th epoch at r2.

    The alpha step uses gradients recomputed after the weight step.
    """
    if cfg.mode != "alternate":
        raise ConfigError(f"alternate_train needs mode='alternate', got {cfg.mode!r}")
    x, y = _check_data(x, y)
    groups = param_groups(net)
    w_group, a_group = groups
    xt = Tensor(x)
    trace = TrainTrace()
    for _ in range(cfg.outer_iters):
        for epoch in range(1, cfg.inner_epochs + 1):
            with Tape() as tape:
                loss = loss_total(net, xt, y, cfg.lambda1, cfg.lambda2, groups)
            backward(tape, loss)
            sgd_step(w_group, cfg.r1)
            a_group.clear_grads()
            if epoch % cfg.alpha_every == 0:
                with Tape() as tape:
                    loss = loss_total(net, xt, y, cfg.lambda1, cfg.lambda2, groups)
                backward(tape, loss)
                sgd_step(a_group, cfg.r2)
                w_group.clear_grads()
            trace.append(*loss_parts(net, x, y, cfg.lambda1, cfg.lambda2, groups))
            _check_finite(trace, cfg)
    return trace


def joint_train(net: DmfNetwork, x, y, cfg: TrainConfig) -> TrainTrace:
    """Joint schedule: one gradient evaluation steps w at r1 and alpha at r2."""
    if cfg.mode != "joint":
        raise ConfigError(f"joint_train needs mode='joint', got {cfg.mode!r}")
    x, y = _check_data(x, y)
    groups = param_groups(net)
    w_group, a_group = groups
    xt = Tensor(x)
    trace = TrainTrace()
    for _ in range(cfg.outer_iters):
        for _epoch in range(1, cfg.inner_epochs + 1):
            with Tape() as tape:
                loss = loss_total(net, xt, y, cfg.lambda1, cfg.lambda2, groups)
            backward(tape, loss)
            sgd_step(w_group, cfg.r1)
            sgd_step(a_group, cfg.r2)
            trace.append(*loss_parts(net, x, y, cfg.lambda1, cfg.lambda2, groups))
            _check_finite(trace, cfg)
    return trace


def train(net: DmfNetwork, x, y, cfg: TrainConfig) -> TrainTrace:
    """Dispatch on cfg.mode."""
    if cfg.mode == "alternate":
        return alternate_train(net, x, y, cfg)
    return joint_train(net, x, y, cfg)


class Normalizer:
    """Per-column z-scoring fitted on training data.

    Constant columns get unit scale so they encode to zero and decode back to
    the mean.  Statistics are frozen at fit time.
    """

    def __init__(self, x_mean, x_std, y_mean, y_std):
        self.x_mean = np.asarray(x_mean, dtype=np.float64)
        self.x_std = np.asarray(x_std, dtype=np.float64)
        self.y_mean = np.asarray(y_mean, dtype=np.float64)
        self.y_std = np.asarray(y_std, dtype=np.float64)

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "Normalizer":
        def stats(a):
            mean = a.mean(axis=0)
            std = a.std(axis=0)
            std = np.where(std < 1e-12, 1.0, std)
            return mean, std
        xm, xs = stats(np.asarray(x, dtype=np.float64))
        ym, ys = stats(np.asarray(y, dtype=np.float64))
        return cls(xm, xs, ym, ys)

    def encode_x(self, x):
        return (np.asarray(x, dtype=np.float64) - self.x_mean) / self.x_std

    def encode_y(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_std

    def decode_y(self, yn):
        return np.asarray(yn, dtype=np.float64) * self.y_std + self.y_mean

    def to_doc(self) -> dict:
        return {k: [float(v) for v in getattr(self, k)]
                for k in ("x_mean", "x_std", "y_mean", "y_std")}

    @classmethod
    def from_doc(cls, doc: dict) -> "Normalizer":
        return cls(doc["x_mean"], doc["x_std"], doc["y_mean"], doc["y_std"])
