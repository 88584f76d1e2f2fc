import numpy as np

from numeric.numeric_exceptions import ShapeMismatchError
from numeric.tensor import Tensor, as_tensor, check_rank


def _check(input_, weights, bias, operation):
    input_ = as_tensor(input_, operation)
    weights = as_tensor(weights, operation, "weights")
    bias = as_tensor(bias, operation, "bias")
    check_rank(input_, 1, operation)
    check_rank(weights, 2, operation, "weights")
    if weights.shape[1] != input_.shape[0]:
        raise ShapeMismatchError(operation, (weights.shape[1],), input_.shape)
    if bias.shape != (weights.shape[0],):
        raise ShapeMismatchError(operation, (weights.shape[0],), bias.shape)
    return input_, weights, bias


def dense_forward(input_, weights, bias) -> Tensor:
    """
    weights @ input + bias for input (N,), weights (M, N), bias (M,)
    """
    input_, weights, bias = _check(input_, weights, bias, "dense_forward")
    return weights @ input_ + bias


def dense_backward(input_, weights, bias, upstream_grad):
    """
    :return: (grad_input, grad_weights, grad_bias)
    """
    input_, weights, bias = _check(input_, weights, bias, "dense_backward")
    upstream_grad = as_tensor(upstream_grad, "dense_backward", "upstream_grad")
    if upstream_grad.shape != bias.shape:
        raise ShapeMismatchError("dense_backward", bias.shape, upstream_grad.shape)
    return weights.T @ upstream_grad, np.outer(upstream_grad, input_), upstream_grad.copy()
