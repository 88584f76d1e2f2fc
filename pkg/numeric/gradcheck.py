"""
Finite-difference verification of every backward function.

For an operation y = f(inputs) and a fixed random upstream gradient u, the scalar L = sum(u * y)
has d L / d input = backward(inputs, u). The numerical side perturbs each input element by +-h
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

import logger
from numeric import activations, conv, dense, loss, pooling


@dataclass(frozen=True)
class GradCheckReport(object):
    op_name: str
    max_relative_error: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class GradCheckOp(object):
    """
    :param forward: inputs dict -> output array
    :param backward: (inputs dict, upstream) -> dict of gradients, keyed like the checked inputs
    :param sample: Generator -> inputs dict at a random point
    :param wrt: names of the inputs to differentiate
    """
    name: str
    forward: Callable
    backward: Callable
    sample: Callable
    wrt: tuple


def numerical_gradient(function, inputs: dict, name: str, h=1e-5) -> np.ndarray:
    """
    Central differences of scalar function(inputs) with respect to inputs[name]
    """
    point = inputs[name]
    grad = np.zeros_like(point)
    flat_point = point.reshape(-1)
    flat_grad = grad.reshape(-1)
    for index in range(flat_point.size):
        original = flat_point[index]
        flat_point[index] = original + h
        upper = function(inputs)
        flat_point[index] = original - h
        lower = function(inputs)
        flat_point[index] = original
        flat_grad[index] = (upper - lower) / (2.0 * h)
    return grad


def relative_error(analytic, numerical) -> float:
    """
    max |analytic - numerical| scaled by the largest numerical magnitude
    """
    scale = max(float(np.max(np.abs(numerical))) if numerical.size else 0.0, 1e-12)
    return float(np.max(np.abs(analytic - numerical))) / scale if analytic.size else 0.0


def grad_check(op: GradCheckOp, point: dict, tolerance=1e-4, upstream_seed=0, h=1e-5, corrupt=1.0) -> GradCheckReport:
    """
    Compares analytic against central-difference gradients of op at point

    :param corrupt: factor applied to the analytic gradients (debug mode, anything but 1.0 must fail)
    """
    inputs = {name: np.array(value, dtype=np.float64, copy=True) for name, value in point.items()}
    output = np.asarray(op.forward(inputs))
    upstream = np.random.default_rng(upstream_seed).uniform(-1.0, 1.0, size=output.shape)

    def scalar(current_inputs):
        return float(np.sum(upstream * np.asarray(op.forward(current_inputs))))

    analytic = op.backward(inputs, upstream)
    worst = 0.0
    for name in op.wrt:
        numerical = numerical_gradient(scalar, inputs, name, h)
        worst = max(worst, relative_error(np.asarray(analytic[name]) * corrupt, numerical))
    return GradCheckReport(op_name=op.name, max_relative_error=worst, tolerance=tolerance, passed=worst <= tolerance)


def _kernel(inputs, stride, padding):
    return conv.ConvKernel(inputs["weights"], inputs["bias"], stride=stride, padding=padding)


def _conv2d_op(name, stride, padding):
    def sample(rng):
        in_channels, out_channels = rng.integers(1, 4), rng.integers(1, 4)
        kernel = int(rng.integers(1, 4))
        size = int(rng.integers(kernel, 8))
        return {"input": rng.normal(size=(in_channels, size, size + 1)),
                "weights": rng.normal(size=(out_channels, in_channels, kernel, kernel)),
                "bias": rng.normal(size=out_channels)}

    def forward(inputs):
        return conv.conv2d_forward(inputs["input"], _kernel(inputs, stride, padding))

    def backward(inputs, upstream):
        grads = conv.conv2d_backward(inputs["input"], _kernel(inputs, stride, padding), upstream)
        return dict(zip(("input", "weights", "bias"), grads))
    return GradCheckOp(name, forward, backward, sample, ("input", "weights", "bias"))


def _partial_conv2d_op(name, stride, padding, per_channel_mask):
    def sample(rng):
        in_channels, out_channels = rng.integers(1, 4), rng.integers(1, 4)
        kernel = int(rng.integers(2, 4))
        size = int(rng.integers(kernel, 8))
        mask_channels = in_channels if per_channel_mask else 1
        return {"input": rng.normal(size=(in_channels, size, size)),
                "mask": (rng.uniform(size=(mask_channels, size, size)) > 0.4).astype(np.float64),
                "weights": rng.normal(size=(out_channels, in_channels, kernel, kernel)),
                "bias": rng.normal(size=out_channels)}

    def forward(inputs):
        return conv.partial_conv2d_forward(inputs["input"], inputs["mask"], _kernel(inputs, stride, padding))[0]

    def backward(inputs, upstream):
        grads = conv.partial_conv2d_backward(inputs["input"], inputs["mask"], _kernel(inputs, stride, padding), upstream)
        return dict(zip(("input", "weights", "bias"), grads))
    return GradCheckOp(name, forward, backward, sample, ("input", "weights", "bias"))


def _conv1d_op(name, stride, padding):
    def sample(rng):
        in_channels, out_channels = rng.integers(1, 4), rng.integers(1, 4)
        kernel = int(rng.integers(1, 6))
        return {"input": rng.normal(size=(in_channels, int(rng.integers(kernel, 16)))),
                "weights": rng.normal(size=(out_channels, in_channels, kernel)),
                "bias": rng.normal(size=out_channels)}

    def forward(inputs):
        return conv.conv1d_forward(inputs["input"], _kernel(inputs, stride, padding))

    def backward(inputs, upstream):
        grads = conv.conv1d_backward(inputs["input"], _kernel(inputs, stride, padding), upstream)
        return dict(zip(("input", "weights", "bias"), grads))
    return GradCheckOp(name, forward, backward, sample, ("input", "weights", "bias"))


def _dense_op():
    def sample(rng):
        n, m = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        return {"input": rng.normal(size=n), "weights": rng.normal(size=(m, n)), "bias": rng.normal(size=m)}

    def forward(inputs):
        return dense.dense_forward(inputs["input"], inputs["weights"], inputs["bias"])

    def backward(inputs, upstream):
        grads = dense.dense_backward(inputs["input"], inputs["weights"], inputs["bias"], upstream)
        return dict(zip(("input", "weights", "bias"), grads))
    return GradCheckOp("dense", forward, backward, sample, ("input", "weights", "bias"))


def _maxpool_op():
    def sample(rng):
        channels, height, width = int(rng.integers(1, 3)), int(rng.integers(2, 9)), int(rng.integers(2, 9))
        count = channels * height * width
        # Distinct values at least 0.01 apart: a perturbation of h never changes a window's winner
        values = rng.permutation(count) * 0.01 + rng.uniform(0.0, 1e-3, size=count)
        return {"input": values.reshape(channels, height, width)}

    def forward(inputs):
        return pooling.maxpool2d(inputs["input"])[0]

    def backward(inputs, upstream):
        _, argmax = pooling.maxpool2d(inputs["input"])
        return {"input": pooling.maxpool2d_backward(upstream, argmax, inputs["input"].shape)}
    return GradCheckOp("maxpool2d", forward, backward, sample, ("input",))


def _upsample_op(name, rank):
    forward_function = pooling.nearest_upsample2d if rank == 3 else pooling.nearest_upsample1d
    backward_function = pooling.nearest_upsample2d_backward if rank == 3 else pooling.nearest_upsample1d_backward

    def sample(rng):
        return {"input": rng.normal(size=tuple(int(size) for size in rng.integers(1, 6, size=rank)))}

    def forward(inputs):
        return forward_function(inputs["input"])

    def backward(inputs, upstream):
        return {"input": backward_function(upstream)}
    return GradCheckOp(name, forward, backward, sample, ("input",))


def _away_from_zero(rng, size):
    return rng.uniform(0.05, 2.0, size=size) * rng.choice((-1.0, 1.0), size=size)


def _activation_op(name, forward_function, backward_function):
    def sample(rng):
        return {"input": _away_from_zero(rng, int(rng.integers(1, 20)))}

    def forward(inputs):
        return forward_function(inputs["input"])

    def backward(inputs, upstream):
        return {"input": backward_function(inputs["input"], upstream)}
    return GradCheckOp(name, forward, backward, sample, ("input",))


def _loss_op():
    def sample(rng):
        size = int(rng.integers(1, 20))
        weight = rng.uniform(0.0, 6.0, size=size)
        weight[0] = 1.0
        return {"pred": rng.uniform(size=size), "target": rng.uniform(size=size), "weight": weight}

    def forward(inputs):
        return np.asarray(loss.weighted_mse_loss(inputs["pred"], inputs["target"], inputs["weight"])[0])

    def backward(inputs, upstream):
        _, grad = loss.weighted_mse_loss(inputs["pred"], inputs["target"], inputs["weight"])
        return {"pred": grad * float(upstream)}
    return GradCheckOp("weighted_mse_loss", forward, backward, sample, ("pred",))


def registered_ops() -> list:
    """
    Every layer operation with a backward function, exactly once
    """
    return [
        _conv2d_op("conv2d", stride=1, padding=1),
        _conv2d_op("conv2d_strided", stride=2, padding=1),
        _conv1d_op("conv1d", stride=2, padding=2),
        _partial_conv2d_op("partial_conv2d", stride=2, padding=1, per_channel_mask=False),
        _partial_conv2d_op("partial_conv2d_per_channel_mask", stride=1, padding=1, per_channel_mask=True),
        _dense_op(),
        _maxpool_op(),
        _upsample_op("nearest_upsample2d", rank=3),
        _upsample_op("nearest_upsample1d", rank=2),
        _activation_op("relu", activations.relu, activations.relu_backward),
        _activation_op("leaky_relu", activations.leaky_relu, activations.leaky_relu_backward),
        _activation_op("sigmoid", activations.sigmoid, activations.sigmoid_backward),
        _loss_op(),
    ]


def run_suite(points=100, seed=0, tolerance=1e-4, corrupt=1.0) -> list:
    """
    Checks every registered op at given number of random points

    :return: one GradCheckReport per op holding its worst point
    """
    reports = []
    for op_index, op in enumerate(registered_ops()):
        rng = np.random.default_rng([seed, op_index])
        worst = 0.0
        for point_index in range(points):
            report = grad_check(op, op.sample(rng), tolerance=tolerance, upstream_seed=[seed, op_index, point_index], corrupt=corrupt)
            worst = max(worst, report.max_relative_error)
        reports.append(GradCheckReport(op_name=op.name, max_relative_error=worst, tolerance=tolerance, passed=worst <= tolerance))
        logger.info(f"Gradient check {op.name}: max relative error {worst:.3e} ({'pass' if worst <= tolerance else 'FAIL'})")
    return reports
