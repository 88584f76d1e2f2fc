import numpy as np

from numeric.numeric_exceptions import ShapeMismatchError
from numeric.tensor import Tensor, as_tensor


def _check_pair(input_, upstream_grad, operation):
    input_ = as_tensor(input_, operation)
    upstream_grad = as_tensor(upstream_grad, operation, "upstream_grad")
    if input_.shape != upstream_grad.shape:
        raise ShapeMismatchError(operation, input_.shape, upstream_grad.shape)
    return input_, upstream_grad


def relu(input_) -> Tensor:
    return np.maximum(as_tensor(input_, "relu"), 0.0)


def relu_backward(input_, upstream_grad) -> Tensor:
    input_, upstream_grad = _check_pair(input_, upstream_grad, "relu_backward")
    return np.where(input_ > 0, upstream_grad, 0.0)


def leaky_relu(input_, alpha=0.2) -> Tensor:
    input_ = as_tensor(input_, "leaky_relu")
    return np.where(input_ > 0, input_, alpha * input_)


def leaky_relu_backward(input_, upstream_grad, alpha=0.2) -> Tensor:
    input_, upstream_grad = _check_pair(input_, upstream_grad, "leaky_relu_backward")
    return np.where(input_ > 0, upstream_grad, alpha * upstream_grad)


def sigmoid(input_) -> Tensor:
    input_ = as_tensor(input_, "sigmoid")
    exp_neg_abs = np.exp(-np.abs(input_))  # never overflows
    return np.where(input_ >= 0, 1.0 / (1.0 + exp_neg_abs), exp_neg_abs / (1.0 + exp_neg_abs))


def sigmoid_backward(input_, upstream_grad) -> Tensor:
    input_, upstream_grad = _check_pair(input_, upstream_grad, "sigmoid_backward")
    output = sigmoid(input_)
    return upstream_grad * output * (1.0 - output)
