import numpy as np

from evaluation.evaluation_exceptions import EmptyMaskError, ConstantTruthError


def _selected(pred, truth, eval_mask, metric):
    eval_mask = np.asarray(eval_mask, dtype=bool)
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or eval_mask.shape != truth.shape:
        raise ValueError(f"{metric}: shapes differ: {pred.shape}, {truth.shape}, {eval_mask.shape}")
    if not eval_mask.any():
        raise EmptyMaskError(metric)
    return pred[eval_mask], truth[eval_mask]


def mse_masked(pred, truth, eval_mask) -> float:
    """
    Mean squared error over the cells selected by eval_mask
    """
    pred, truth = _selected(pred, truth, eval_mask, "mse_masked")
    difference = pred - truth
    return float(np.mean(difference * difference))


def r2_masked(pred, truth, eval_mask) -> float:
    """
    1 - SSres / SStot over the cells selected by eval_mask
    """
    pred, truth = _selected(pred, truth, eval_mask, "r2_masked")
    residual = truth - pred
    centered = truth - truth.mean()
    total = float(np.sum(centered * centered))
    if truth.size < 2 or total == 0.0:
        raise ConstantTruthError(truth.size)
    return 1.0 - float(np.sum(residual * residual)) / total
