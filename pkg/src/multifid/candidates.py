"""The five candidate operations and the softmax-mixed edge built from them.

Candidate stacks (hidden widths, ReLU between consecutive affine layers):

  deep     in -> 20 -> 20 -> 20 -> 20
  shallow  in -> 20 -> 20
  wide     in -> 40 -> 40
  linear   one affine map straight to out_dim, no activation
  zero     no parameters, output is the zero matrix

Whenever a stack's last hidden width differs from the edge's out_dim, the
stack is terminated by one extra affine projection to out_dim, so that all
five operations of an edge agree on output shape and can be mixed.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ShapeMismatch


class OpKind(Enum):
    """The candidate set; member order fixes the mixing-weight index."""

    DEEP = 0
    SHALLOW = 1
    WIDE = 2
    LINEAR = 3
    ZERO = 4


HIDDEN_WIDTHS = {
    OpKind.DEEP: (20, 20, 20, 20),
    OpKind.SHALLOW: (20, 20),
    OpKind.WIDE: (40, 40),
    OpKind.LINEAR: (),
    OpKind.ZERO: None,
}


def _init_weight(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class CandidateOp:
    """One candidate operation: a fixed stack of affine layers with ReLU between."""

    def __init__(self, kind: OpKind, in_dim: int, out_dim: int, layers):
        self.kind = kind
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.layers = layers  # list of (W Tensor [p x q], b Tensor [q])

    def n_params(self) -> int:
        return sum(w.data.size + b.data.size for w, b in self.layers)


def build_candidate(kind: OpKind, in_dim: int, out_dim: int, rng) -> CandidateOp:
    """Build one candidate with the stack for ``kind``.

    ``rng`` is a seeded ``numpy.random.Generator`` (or an int seed).  Weights
    draw uniform from [-sqrt(6/fan_in), +sqrt(6/fan_in)]; biases start at 0.
    """
    if in_dim < 1 or out_dim < 1:
        raise ConfigError(f"dims must be >= 1, got in={in_dim} out={out_dim}")
    if isinstance(rng, int):
        rng = np.random.default_rng(rng)
    if kind is OpKind.ZERO:
        return CandidateOp(kind, in_dim, out_dim, [])
    if kind is OpKind.LINEAR:
        dims = [in_dim, out_dim]
    else:
        widths = list(HIDDEN_WIDTHS[kind])
        dims = [in_dim] + widths
        if widths[-1] != out_dim:
            dims.append(out_dim)
    layers = []
    for p, q in zip(dims[:-1], dims[1:]):
        w = Tensor(_init_weight(rng, p, q))
        b = Tensor(np.zeros(q))
        layers.append((w, b))
    return CandidateOp(kind, in_dim, out_dim, layers)


def candidate_forward(op: CandidateOp, x: Tensor) -> Tensor:
    """Run one candidate on a batch; zero op returns exact zeros."""
    if x.data.ndim != 2 or x.data.shape[1] != op.in_dim:
        raise ShapeMismatch(f"candidate_forward[{op.kind.name.lower()}]",
                            x.data.shape, ("n", op.in_dim))
    if op.kind is OpKind.ZERO:
        return Tensor(np.zeros((x.data.shape[0], op.out_dim)))
    h = x
    last = len(op.layers) - 1
    for idx, (w, b) in enumerate(op.layers):
        h = ad.linear(h, w, b)
        if idx != last:
            h = ad.relu(h)
    return h


class MixedEdge:
    """All five candidates on one edge plus their architecture logits.

    The edge output is the softmax(alpha)-weighted sum of the candidate
    outputs, so it stays differentiable in both the layer weights and alpha.
    """

    def __init__(self, in_dim: int, out_dim: int, rng):
        if isinstance(rng, int):
            rng = np.random.default_rng(rng)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.ops = [build_candidate(kind, in_dim, out_dim, rng) for kind in OpKind]
        # zero logits start the search from equal mixing weights
        self.alpha = Tensor(np.zeros(len(OpKind)))

    def mixing_weights(self) -> np.ndarray:
        return ad.softmax(self.alpha).data.copy()


def mixed_forward(edge: MixedEdge, x: Tensor) -> Tensor:
    """softmax(alpha)-weighted combination of the five candidate outputs."""
    weights = ad.softmax(edge.alpha)
    outs = [candidate_forward(op, x) for op in edge.ops]
    return ad.weighted_sum(weights, outs)
