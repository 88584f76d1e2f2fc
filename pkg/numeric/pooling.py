import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from numeric.numeric_exceptions import ShapeMismatchError
from numeric.tensor import Tensor, as_tensor, check_rank


def _pool_padding(size, window, stride):
    """
    Cells appended on the right so that the last window is complete
    """
    if size <= window:
        return window - size
    remainder = (size - window) % stride
    return 0 if remainder == 0 else stride - remainder


def maxpool2d(input_, window=2, stride=2):
    """
    Max pooling over (C, H, W). Incomplete border windows get -inf padding on the right/bottom.
    Ties go to the first (row-major) maximal cell

    :return: (output (C, H', W'), argmax (C, H', W') flat index inside each window)
    """
    input_ = as_tensor(input_, "maxpool2d")
    check_rank(input_, 3, "maxpool2d")
    pad_h = _pool_padding(input_.shape[1], window, stride)
    pad_w = _pool_padding(input_.shape[2], window, stride)
    padded = input_
    if pad_h or pad_w:
        padded = np.pad(input_, ((0, 0), (0, pad_h), (0, pad_w)), constant_values=-np.inf)
    windows = sliding_window_view(padded, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    flat = windows.reshape(windows.shape[:3] + (window * window,))
    argmax = flat.argmax(axis=-1)
    output = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(output), argmax


def maxpool2d_backward(upstream_grad, argmax, input_shape, window=2, stride=2) -> Tensor:
    """
    Routes every upstream gradient to the cell that won its window
    """
    upstream_grad = as_tensor(upstream_grad, "maxpool2d_backward", "upstream_grad")
    if upstream_grad.shape != argmax.shape:
        raise ShapeMismatchError("maxpool2d_backward", argmax.shape, upstream_grad.shape)
    channels, height, width = input_shape
    padded_shape = (channels, height + _pool_padding(height, window, stride), width + _pool_padding(width, window, stride))
    out_h, out_w = argmax.shape[1:]
    rows = np.arange(out_h)[None, :, None] * stride + argmax // window
    cols = np.arange(out_w)[None, None, :] * stride + argmax % window
    channel_index = np.broadcast_to(np.arange(channels)[:, None, None], argmax.shape)
    grad = np.zeros(padded_shape)
    np.add.at(grad, (channel_index, rows, cols), upstream_grad)
    return np.ascontiguousarray(grad[:, :height, :width])


def nearest_upsample2d(input_, factor=2) -> Tensor:
    input_ = as_tensor(input_, "nearest_upsample2d")
    check_rank(input_, 3, "nearest_upsample2d")
    return input_.repeat(factor, axis=1).repeat(factor, axis=2)


def nearest_upsample2d_backward(upstream_grad, factor=2) -> Tensor:
    upstream_grad = as_tensor(upstream_grad, "nearest_upsample2d_backward", "upstream_grad")
    channels, height, width = upstream_grad.shape
    if height % factor or width % factor:
        raise ShapeMismatchError("nearest_upsample2d_backward", (channels, f"k*{factor}", f"k*{factor}"), upstream_grad.shape)
    return upstream_grad.reshape(channels, height // factor, factor, width // factor, factor).sum(axis=(2, 4))


def nearest_upsample1d(input_, factor=2) -> Tensor:
    input_ = as_tensor(input_, "nearest_upsample1d")
    check_rank(input_, 2, "nearest_upsample1d")
    return input_.repeat(factor, axis=1)


def nearest_upsample1d_backward(upstream_grad, factor=2) -> Tensor:
    upstream_grad = as_tensor(upstream_grad, "nearest_upsample1d_backward", "upstream_grad")
    channels, length = upstream_grad.shape
    if length % factor:
        raise ShapeMismatchError("nearest_upsample1d_backward", (channels, f"k*{factor}"), upstream_grad.shape)
    return upstream_grad.reshape(channels, length // factor, factor).sum(axis=2)
