import numpy as np

from numeric.numeric_exceptions import ShapeMismatchError, ZeroWeightError, NumericError
from numeric.tensor import as_tensor


def weighted_mse_loss(pred, target, weight):
    """
    sum(weight * (pred - target)^2) / sum(weight)

    :return: (loss as float, gradient with respect to pred)
    """
    pred = as_tensor(pred, "weighted_mse_loss", "pred")
    target = as_tensor(target, "weighted_mse_loss", "target")
    weight = as_tensor(weight, "weighted_mse_loss", "weight")
    for name, tensor in (("target", target), ("weight", weight)):
        if tensor.shape != pred.shape:
            raise ShapeMismatchError(f"weighted_mse_loss {name}", pred.shape, tensor.shape)
    if np.any(weight < 0):
        raise NumericError("weighted_mse_loss: weights must be non-negative")
    total_weight = float(weight.sum())
    if total_weight <= 0.0:
        raise ZeroWeightError("weighted_mse_loss: all weights are zero, no cell contributes to the loss")
    difference = pred - target
    loss = float(np.sum(weight * difference * difference) / total_weight)
    grad = 2.0 * weight * difference / total_weight
    return loss, grad
