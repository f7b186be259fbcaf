"""Evaluation metrics: RMSE over all entries, R-squared, pixel-wise MAE fields."""

from __future__ import annotations

import numpy as np

from .datagen.pde import FieldGrid
from .errors import ConfigError, ShapeMismatch


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Root mean square error over every entry of the prediction matrix."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeMismatch("rmse", pred.shape, truth.shape)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def r_squared(pred, truth) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot; may be negative."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape:
        raise ShapeMismatch("r_squared", pred.shape, truth.shape)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if np.ptp(truth) == 0.0 or ss_tot == 0.0:
        raise ConfigError("r_squared undefined for constant truth")
    ss_res = float(np.sum((truth - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def mae_field(preds, truths) -> FieldGrid:
    """Pixel-wise mean over test pairs of the absolute error."""
    if len(preds) != len(truths) or not preds:
        raise ShapeMismatch("mae_field", (len(preds),), (len(truths),))
    shape = preds[0].values.shape
    acc = np.zeros(shape)
    for p, t in zip(preds, truths):
        if p.values.shape != shape or t.values.shape != shape:
            raise ShapeMismatch("mae_field", t.values.shape, shape)
        acc += np.abs(p.values - t.values)
    first = preds[0]
    return FieldGrid(acc / len(preds), row_extent=first.row_extent,
                     col_extent=first.col_extent)
