"""Reverse-mode automatic differentiation over dense float64 arrays.

A forward pass runs inside a ``Tape`` context; every primitive records a
backward closure on the active tape.  ``backward`` replays the closures in
exact reverse order, accumulating gradients additively on every tensor that
feeds more than one consumer.  Outside a tape, the same primitives compute
plain values and record nothing, which is how inference runs.

A network/tape pair belongs to one execution context for the duration of a
forward/backward cycle; tensors with no pending tape references may be
shared read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ShapeMismatch, StaleTapeError


class Tensor:
    """A float64 array node with an additively accumulated gradient."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


_ACTIVE_TAPE = None


class Tape:
    """Ordered record of the primitives applied during one forward pass.

    Used as a context manager; the reverse sweep visits records in exact
    reverse order of recording and may run only once per tape.
    """

    def __init__(self):
        self._records: list[Callable[[], None]] = []
        self._spent = False

    def __enter__(self):
        global _ACTIVE_TAPE
        if _ACTIVE_TAPE is not None:
            raise ConfigError("a tape is already active in this context")
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = None
        return False

    def _record(self, fn):
        self._records.append(fn)


def _accumulate(t: Tensor, g: np.ndarray):
    t.grad = g if t.grad is None else t.grad + g


def backward(tape: Tape, loss: Tensor):
    """Run the reverse sweep, filling ``grad`` on every tensor on the tape.

    ``loss`` must be the scalar produced by the taped forward pass.  A tape
    can be swept once; sweeping again raises ``StaleTapeError``.
    """
    if tape._spent:
        raise StaleTapeError("tape already consumed; run a new forward pass")
    if loss.data.shape != ():
        raise ShapeMismatch("backward", loss.data.shape, ())
    tape._spent = True
    loss.grad = np.asarray(1.0)
    for fn in reversed(tape._records):
        fn()


# ---------------------------------------------------------------------------
# Primitives.  Each computes with numpy and records its backward closure on
# the active tape (if any).  Captured arrays are the forward-time values.
# ---------------------------------------------------------------------------


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map: out[i, j] = sum_k x[i, k] w[k, j] + b[j]."""
    xd, wd, bd = x.data, w.data, b.data
    if xd.ndim != 2 or wd.ndim != 2 or xd.shape[1] != wd.shape[0]:
        raise ShapeMismatch("linear", xd.shape, wd.shape)
    if bd.shape != (wd.shape[1],):
        raise ShapeMismatch("linear bias", bd.shape, (wd.shape[1],))
    out = Tensor(xd @ wd + bd)
    if _ACTIVE_TAPE is not None:
        def back():
            g = out.grad
            _accumulate(x, g @ wd.T)
            _accumulate(w, xd.T @ g)
            _accumulate(b, g.sum(axis=0))
        _ACTIVE_TAPE._record(back)
    return out


def relu(x: Tensor) -> Tensor:
    """Elementwise max(0, x); the reverse sweep uses subgradient 0 at 0."""
    out = Tensor(np.maximum(x.data, 0.0))
    if _ACTIVE_TAPE is not None:
        mask = x.data > 0.0
        def back():
            _accumulate(x, out.grad * mask)
        _ACTIVE_TAPE._record(back)
    return out


def softmax(v: Tensor) -> Tensor:
    """Probability vector exp(v)/sum(exp(v)), computed with max-subtraction."""
    vd = v.data
    if vd.ndim != 1 or vd.size < 1:
        raise ShapeMismatch("softmax", vd.shape, ("k",))
    e = np.exp(vd - vd.max())
    s = e / e.sum()
    out = Tensor(s)
    if _ACTIVE_TAPE is not None:
        def back():
            g = out.grad
            _accumulate(v, s * (g - np.dot(g, s)))
        _ACTIVE_TAPE._record(back)
    return out


def mse(pred: Tensor, target) -> Tensor:
    """Mean over samples of the squared vector error: (1/n) sum_i ||p_i - t_i||^2."""
    td = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if pred.data.shape != td.shape:
        raise ShapeMismatch("mse", pred.data.shape, td.shape)
    n = pred.data.shape[0] if pred.data.ndim > 0 else 1
    diff = pred.data - td
    out = Tensor(np.sum(diff * diff) / n)
    if _ACTIVE_TAPE is not None:
        def back():
            _accumulate(pred, (2.0 / n) * diff * out.grad)
        _ACTIVE_TAPE._record(back)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shape tensors."""
    if a.data.shape != b.data.shape:
        raise ShapeMismatch("add", a.data.shape, b.data.shape)
    out = Tensor(a.data + b.data)
    if _ACTIVE_TAPE is not None:
        def back():
            _accumulate(a, out.grad)
            _accumulate(b, out.grad)
        _ACTIVE_TAPE._record(back)
    return out


def add_n(items: Sequence[Tensor]) -> Tensor:
    """Sum of a nonempty list of same-shape tensors."""
    if not items:
        raise ConfigError("add_n needs at least one tensor")
    shape = items[0].data.shape
    for t in items[1:]:
        if t.data.shape != shape:
            raise ShapeMismatch("add_n", t.data.shape, shape)
    out = Tensor(sum(t.data for t in items))
    if _ACTIVE_TAPE is not None:
        def back():
            for t in items:
                _accumulate(t, out.grad)
        _ACTIVE_TAPE._record(back)
    return out


def weighted_sum(weights: Tensor, items: Sequence[Tensor]) -> Tensor:
    """sum_l weights[l] * items[l] for a weight vector and same-shape tensors."""
    wd = weights.data
    if wd.ndim != 1 or wd.size != len(items):
        raise ShapeMismatch("weighted_sum", wd.shape, (len(items),))
    shape = items[0].data.shape
    for t in items[1:]:
        if t.data.shape != shape:
            raise ShapeMismatch("weighted_sum", t.data.shape, shape)
    out = Tensor(sum(wd[l] * items[l].data for l in range(len(items))))
    if _ACTIVE_TAPE is not None:
        def back():
            g = out.grad
            gw = np.empty_like(wd)
            for l, t in enumerate(items):
                gw[l] = np.sum(t.data * g)
                _accumulate(t, wd[l] * g)
            _accumulate(weights, gw)
        _ACTIVE_TAPE._record(back)
    return out


def sq_sum(t: Tensor) -> Tensor:
    """Sum of squares over all entries (scalar)."""
    out = Tensor(np.sum(t.data * t.data))
    if _ACTIVE_TAPE is not None:
        def back():
            _accumulate(t, 2.0 * t.data * out.grad)
        _ACTIVE_TAPE._record(back)
    return out


def sq_sum_group(tensors: Sequence[Tensor]) -> Tensor:
    """Sum of squares over all entries of several tensors, as one tape record."""
    if not tensors:
        raise ConfigError("sq_sum_group needs at least one tensor")
    acc = 0.0
    for t in tensors:
        flat = t.data.reshape(-1)
        acc += flat.dot(flat)
    out = Tensor(acc)
    if _ACTIVE_TAPE is not None:
        def back():
            g = out.grad
            for t in tensors:
                _accumulate(t, (2.0 * g) * t.data)
        _ACTIVE_TAPE._record(back)
    return out


def scale(t: Tensor, c: float) -> Tensor:
    """Multiply by a python-float constant (not differentiated w.r.t. c)."""
    out = Tensor(c * t.data)
    if _ACTIVE_TAPE is not None:
        def back():
            _accumulate(t, c * out.grad)
        _ACTIVE_TAPE._record(back)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two matrices with equal row counts along columns."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[0] != b.data.shape[0]:
        raise ShapeMismatch("concat_cols", a.data.shape, b.data.shape)
    out = Tensor(np.concatenate([a.data, b.data], axis=1))
    if _ACTIVE_TAPE is not None:
        na = a.data.shape[1]
        def back():
            g = out.grad
            _accumulate(a, g[:, :na])
            _accumulate(b, g[:, na:])
        _ACTIVE_TAPE._record(back)
    return out


# ---------------------------------------------------------------------------
# Parameter bookkeeping and optimization.
# ---------------------------------------------------------------------------

GROUP_LABELS = ("weights", "architecture", "head")


@dataclass
class ParamGroup:
    """Named parameter tensors sharing one role and one learning rate."""

    label: str
    params: dict[str, Tensor] = field(default_factory=dict)
    rate: float = 0.0

    def __post_init__(self):
        if self.label not in GROUP_LABELS:
            raise ConfigError(f"unknown group label {self.label!r}")
        if self.rate < 0:
            raise ConfigError("learning rate must be nonnegative")

    def add(self, name: str, t: Tensor):
        if name in self.params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        self.params[name] = t

    def tensors(self):
        return list(self.params.values())

    def clear_grads(self):
        for t in self.params.values():
            t.grad = None

    def n_params(self) -> int:
        return sum(t.data.size for t in self.params.values())


def sgd_step(group: ParamGroup, rate: float) -> ParamGroup:
    """Plain gradient-descent step: p <- p - rate * grad, then clear grads."""
    if rate < 0:
        raise ConfigError("sgd_step rate must be nonnegative")
    for t in group.params.values():
        if t.grad is not None:
            t.data = t.data - rate * t.grad
            t.grad = None
    return group


def fd_gradient(f: Callable[[], float], params: Sequence[Tensor], h: float = 1e-5):
    """Central-difference gradients of a scalar function of the parameters.

    ``f`` is re-evaluated with each coordinate perturbed by +/- h; entries
    are (f(p+h e) - f(p-h e)) / (2h).  Testing oracle; O(2 * n_params) calls.
    """
    if h <= 0:
        raise ConfigError("fd_gradient step h must be positive")
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = float(f())
            flat[i] = orig - h
            lo = float(f())
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * h)
        grads.append(g)
    return grads
