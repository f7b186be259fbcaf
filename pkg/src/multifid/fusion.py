"""Multi-fidelity model variants built on the searchable network.

  low    the pretrained low-fidelity network used as-is
  trans  low network plus a single linear head on [x, f_low(x)], fine-tuned
         on high-fidelity data with small rates on the pretrained parts and
         a larger rate on the head
  dmf2   a second network trained on (f_low(x_high), y_high) pairs
  hf     a fresh network trained on high-fidelity data only
  copy   a deep copy of the low model fine-tuned on high-fidelity data with
         no head

All models are immutable after training and safe to share for parallel
prediction.  Variants operate on the lowest and highest fidelity levels of
a dataset.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import ParamGroup, Tape, Tensor, backward, sgd_step
from .dag import (DagConfig, DmfNetwork, build_dag, dag_forward,
                  network_from_doc, network_to_doc, param_groups)
from .errors import ConfigError, ShapeMismatch
from .datagen.dataset import FidelityDataset
from .training import Normalizer, TrainConfig, alternate_train

VARIANTS = ("trans", "dmf2", "hf", "copy", "low")

_FINETUNE_FIELDS = ("r1", "r2", "r3", "epochs", "seed")


@dataclass
class FinetuneConfig:
    """Per-group rates and epoch count for high-fidelity fine-tuning.

    r1/r2 apply to the pretrained layer weights / logits, r3 to the head.
    All groups step every epoch from the same gradients.
    """

    r1: float = 1e-4
    r2: float = 1e-4
    r3: float = 1e-2
    epochs: int = 2000
    seed: int = 0

    def __post_init__(self):
        if min(self.r1, self.r2, self.r3) < 0:
            raise ConfigError("fine-tune rates must be nonnegative")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")

    @classmethod
    def from_json(cls, doc) -> "FinetuneConfig":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        unknown = sorted(set(doc) - set(_FINETUNE_FIELDS))
        if unknown:
            raise ConfigError(f"unknown fine-tune config keys: {unknown}")
        return cls(**doc)

    def to_doc(self) -> dict:
        return asdict(self)


class LowModel:
    """A trained network with its frozen normalization statistics."""

    variant = "low"

    def __init__(self, net: DmfNetwork, norm: Normalizer, trace=None):
        self.net = net
        self.norm = norm
        self.trace = trace

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = dag_forward(self.net, Tensor(self.norm.encode_x(x))).data
        return self.norm.decode_y(out)

    def clone(self) -> "LowModel":
        return LowModel(network_from_doc(network_to_doc(self.net)),
                        copy.deepcopy(self.norm))

    def to_doc(self) -> dict:
        return {"variant": self.variant, "net": network_to_doc(self.net),
                "norm": self.norm.to_doc()}


def pretrain_low(data: FidelityDataset, cfg: TrainConfig, n_cells: int = 3,
                 node_width: int = 20) -> LowModel:
    """Fit normalization on the lowest level and train a network on it."""
    level = data.lowest
    if level.n == 0:
        raise ConfigError("lowest fidelity level is empty")
    norm = Normalizer.fit(level.x, level.y)
    net = build_dag(DagConfig(n_cells, level.x.shape[1], level.d, node_width), cfg.seed)
    trace = alternate_train(net, norm.encode_x(level.x), norm.encode_y(level.y), cfg)
    return LowModel(net, norm, trace)


class TransModel:
    """Low model plus one linear head mapping [x, f_low(x)] to the high output.

    The head works in normalized coordinates: inputs are the z-scored x and
    the low network's normalized output; the head output is de-normalized
    with statistics fitted on the high-fidelity training outputs.
    """

    variant = "trans"

    def __init__(self, low: LowModel, head_w: Tensor, head_b: Tensor,
                 y_norm: Normalizer = None):
        self.low = low
        self.head_w = head_w
        self.head_b = head_b
        self.y_norm = y_norm  # output statistics, fitted on first fine-tune
        self.trace = None

    @property
    def d_high(self) -> int:
        return self.head_w.data.shape[1]

    def head_group(self) -> ParamGroup:
        g = ParamGroup("head")
        g.add("head/w", self.head_w)
        g.add("head/b", self.head_b)
        return g

    def _forward(self, xn: Tensor) -> Tensor:
        f_low = dag_forward(self.low.net, xn)
        return ad.linear(ad.concat_cols(xn, f_low), self.head_w, self.head_b)

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.y_norm is None:
            raise ConfigError("model not fine-tuned: output statistics missing")
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = self._forward(Tensor(self.low.norm.encode_x(x))).data
        return self.y_norm.decode_y(out)

    def to_doc(self) -> dict:
        return {
            "variant": self.variant,
            "net": network_to_doc(self.low.net),
            "norm": self.low.norm.to_doc(),
            "head": {
                "shape": list(self.head_w.data.shape),
                "w": [[float(v) for v in row] for row in self.head_w.data],
                "b": [float(v) for v in self.head_b.data],
            },
            "y_norm": None if self.y_norm is None else self.y_norm.to_doc(),
        }


def build_trans(low: LowModel, d_high: int, seed: int = 0) -> TransModel:
    """Attach a zero-initialized head of shape (l + d_low) x d_high.

    Zero initialization makes the untuned model predict the high-fidelity
    output mean and keeps the r1 = r2 = 0 contract testable; the seed is
    accepted for interface stability but unused.
    """
    del seed
    l = low.norm.x_mean.shape[0]
    d_low = low.net.config.out_dim
    head_w = Tensor(np.zeros((l + d_low, d_high)))
    head_b = Tensor(np.zeros(d_high))
    return TransModel(low, head_w, head_b)


def finetune_trans(model: TransModel, data: FidelityDataset,
                   cfg: FinetuneConfig) -> TransModel:
    """Joint gradient steps on the high-fidelity MSE with per-group rates.

    Output statistics are (re)fitted on the highest level's outputs before
    the first step; with r1 = r2 = 0 the pretrained network stays bit-exact.
    """
    level = data.highest
    if level.n == 0:
        raise ConfigError("highest fidelity level is empty")
    if level.d != model.d_high:
        raise ShapeMismatch("finetune_trans", (level.d,), (model.d_high,))
    if model.y_norm is None:
        model.y_norm = Normalizer.fit(level.x, level.y)
    xn = Tensor(model.low.norm.encode_x(level.x))
    yn = model.y_norm.encode_y(level.y)
    w_group, a_group = param_groups(model.low.net)
    head = model.head_group()
    losses = []
    for _ in range(cfg.epochs):
        with Tape() as tape:
            loss = ad.mse(model._forward(xn), yn)
        backward(tape, loss)
        sgd_step(w_group, cfg.r1)
        sgd_step(a_group, cfg.r2)
        sgd_step(head, cfg.r3)
        losses.append(float(loss.data))
    model.trace = losses
    return model


class Dmf2Model:
    """Second network mapping the low model's predicted response to the high one."""

    variant = "dmf2"

    def __init__(self, low: LowModel, second: LowModel):
        self.low = low
        self.second = second

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.second.predict(self.low.predict(x))

    def to_doc(self) -> dict:
        return {"variant": self.variant,
                "net": network_to_doc(self.low.net), "norm": self.low.norm.to_doc(),
                "second_net": network_to_doc(self.second.net),
                "second_norm": self.second.norm.to_doc()}


def train_dmf2(low: LowModel, data: FidelityDataset, cfg: TrainConfig,
               n_cells: int = 3) -> Dmf2Model:
    """Train the second network on (f_low(x_high), y_high) pairs.

    The second network consumes predicted low-fidelity responses (not ground
    truth), matching what is available at test time.
    """
    level = data.highest
    if level.n == 0:
        raise ConfigError("highest fidelity level is empty")
    f_low = low.predict(level.x)
    norm = Normalizer.fit(f_low, level.y)
    net = build_dag(DagConfig(n_cells, f_low.shape[1], level.d), cfg.seed)
    trace = alternate_train(net, norm.encode_x(f_low), norm.encode_y(level.y), cfg)
    return Dmf2Model(low, LowModel(net, norm, trace))


class HfOnlyModel(LowModel):
    """A single network trained on high-fidelity data only."""

    variant = "hf"


def train_hf_only(data: FidelityDataset, cfg: TrainConfig, n_cells: int = 3) -> HfOnlyModel:
    level = data.highest
    if level.n == 0:
        raise ConfigError("highest fidelity level is empty")
    norm = Normalizer.fit(level.x, level.y)
    net = build_dag(DagConfig(n_cells, level.x.shape[1], level.d), cfg.seed)
    trace = alternate_train(net, norm.encode_x(level.x), norm.encode_y(level.y), cfg)
    model = HfOnlyModel(net, norm, trace)
    return model


class CopyModel(LowModel):
    """Deep copy of the low model, fine-tuned on high-fidelity data, no head."""

    variant = "copy"


def train_copy(low: LowModel, data: FidelityDataset, cfg: FinetuneConfig) -> CopyModel:
    """Clone the low model and fine-tune it directly on the highest level.

    Requires matching output dimensions; the clone keeps the low model's
    normalization statistics (it is a copy, not a refit).  Layer weights
    step at r1 and logits at r2 every epoch.
    """
    level = data.highest
    if level.n == 0:
        raise ConfigError("highest fidelity level is empty")
    if level.d != low.net.config.out_dim:
        raise ShapeMismatch("train_copy", (level.d,), (low.net.config.out_dim,))
    clone = low.clone()
    model = CopyModel(clone.net, clone.norm)
    xn = Tensor(model.norm.encode_x(level.x))
    yn = model.norm.encode_y(level.y)
    w_group, a_group = param_groups(model.net)
    losses = []
    for _ in range(cfg.epochs):
        with Tape() as tape:
            loss = ad.mse(dag_forward(model.net, xn), yn)
        backward(tape, loss)
        sgd_step(w_group, cfg.r1)
        sgd_step(a_group, cfg.r2)
        losses.append(float(loss.data))
    model.trace = losses
    return model


def predict_high(model, x: np.ndarray) -> np.ndarray:
    """De-normalized high-fidelity prediction for any trained variant."""
    return model.predict(x)


# ---------------------------------------------------------------------------
# Variant training entry point and model (de)serialization.
# ---------------------------------------------------------------------------


def train_variant(variant: str, data: FidelityDataset, pretrain_cfg: TrainConfig,
                  finetune_cfg: FinetuneConfig = None, n_cells: int = 3,
                  low: LowModel = None):
    """Train one named variant end to end.

    ``low`` lets callers reuse a pretrained low model (it is cloned before
    any fine-tuning, so the argument is never mutated).
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if finetune_cfg is None:
        finetune_cfg = FinetuneConfig()
    if variant == "hf":
        return train_hf_only(data, pretrain_cfg, n_cells)
    if low is None:
        low = pretrain_low(data, pretrain_cfg, n_cells)
    if variant == "low":
        return low
    if variant == "trans":
        model = build_trans(low.clone(), data.highest.d)
        return finetune_trans(model, data, finetune_cfg)
    if variant == "dmf2":
        return train_dmf2(low, data, pretrain_cfg, n_cells)
    return train_copy(low, data, finetune_cfg)


def model_to_doc(model) -> dict:
    return model.to_doc()


def model_from_doc(doc: dict):
    variant = doc.get("variant")
    if variant in ("low", "hf", "copy"):
        cls = {"low": LowModel, "hf": HfOnlyModel, "copy": CopyModel}[variant]
        return cls(network_from_doc(doc["net"]), Normalizer.from_doc(doc["norm"]))
    if variant == "trans":
        low = LowModel(network_from_doc(doc["net"]), Normalizer.from_doc(doc["norm"]))
        head = doc["head"]
        model = TransModel(low,
                           Tensor(np.array(head["w"], dtype=np.float64)),
                           Tensor(np.array(head["b"], dtype=np.float64)))
        if doc.get("y_norm"):
            model.y_norm = Normalizer.from_doc(doc["y_norm"])
        return model
    if variant == "dmf2":
        low = LowModel(network_from_doc(doc["net"]), Normalizer.from_doc(doc["norm"]))
        second = LowModel(network_from_doc(doc["second_net"]),
                          Normalizer.from_doc(doc["second_norm"]))
        return Dmf2Model(low, second)
    raise ConfigError(f"unknown model variant {variant!r}")


def save_model(model, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(model_to_doc(model), fh, indent=1)
        fh.write("\n")


def load_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such model file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    return model_from_doc(doc)
