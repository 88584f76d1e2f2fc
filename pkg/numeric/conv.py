"""
Convolutions over single samples: 2D inputs are (C, H, W), 1D inputs (C, L).
Windows are strided views of the zero-padded input, contracted with the weights by tensordot
"""
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from numeric.numeric_exceptions import ShapeMismatchError, NonBinaryMaskError
from numeric.tensor import Tensor, as_tensor, check_rank, output_size


@dataclass
class ConvKernel(object):
    """
    Weights (out_channels, in_channels, kH, kW) for 2D or (out_channels, in_channels, k) for 1D,
    bias (out_channels,)
    """
    weights: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        self.weights = as_tensor(self.weights, "ConvKernel", "weights")
        self.bias = as_tensor(self.bias, "ConvKernel", "bias")
        if self.weights.ndim not in (3, 4):
            raise ShapeMismatchError("ConvKernel", ("out", "in", "kH", "[kW]"), self.weights.shape)
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeMismatchError("ConvKernel bias", (self.weights.shape[0],), self.bias.shape)
        if int(self.stride) < 1 or int(self.padding) < 0:
            raise ValueError(f"ConvKernel: stride must be >= 1 and padding >= 0, got {self.stride}/{self.padding}")
        self.stride = int(self.stride)
        self.padding = int(self.padding)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_shape(self) -> tuple:
        return tuple(self.weights.shape[2:])

    def output_shape(self, spatial_shape, operation="conv") -> tuple:
        """
        Output spatial shape for given input spatial shape, raises if any dimension drops below 1
        """
        sizes = tuple(output_size(size, kernel, self.stride, self.padding) for size, kernel in zip(spatial_shape, self.kernel_shape))
        if any(size < 1 for size in sizes):
            raise ShapeMismatchError(operation, ("output size >= 1",), sizes)
        return sizes


def _check_input(input_, kernel: ConvKernel, rank, operation):
    input_ = as_tensor(input_, operation)
    check_rank(input_, rank, operation)
    if kernel.weights.ndim != rank + 1:
        raise ShapeMismatchError(operation, (f"rank {rank + 1} kernel",), kernel.weights.shape)
    if input_.shape[0] != kernel.in_channels:
        raise ShapeMismatchError(operation, (kernel.in_channels,) + input_.shape[1:], input_.shape)
    return input_, kernel.output_shape(input_.shape[1:], operation)


def _check_upstream(upstream_grad, expected_shape, operation):
    upstream_grad = as_tensor(upstream_grad, operation, "upstream_grad")
    if upstream_grad.shape != tuple(expected_shape):
        raise ShapeMismatchError(operation, expected_shape, upstream_grad.shape)
    return upstream_grad


def _pad2d(tensor, padding):
    if padding == 0:
        return tensor
    return np.pad(tensor, ((0, 0), (padding, padding), (padding, padding)))


def _windows2d(padded, kernel_shape, stride):
    """
    (C, Ho, Wo, kH, kW) view of padded
    """
    return sliding_window_view(padded, kernel_shape, axis=(1, 2))[:, ::stride, ::stride]


def _correlate2d(padded, weights, stride):
    windows = _windows2d(padded, weights.shape[2:], stride)
    return np.tensordot(weights, windows, axes=([1, 2, 3], [0, 3, 4]))


def _scatter2d(columns, padded_shape, stride):
    """
    Adjoint of _windows2d: sums (C, kH, kW, Ho, Wo) window contributions back onto the padded grid
    """
    grad = np.zeros(padded_shape)
    _, kernel_h, kernel_w, out_h, out_w = columns.shape
    for i in range(kernel_h):
        for j in range(kernel_w):
            grad[:, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += columns[:, i, j]
    return grad


def _crop2d(padded, padding, shape):
    return np.ascontiguousarray(padded[:, padding:padding + shape[1], padding:padding + shape[2]])


def conv2d_forward(input_, kernel: ConvKernel) -> Tensor:
    """
    Cross-correlation of (C_in, H, W) input with kernel plus bias; zero padding
    """
    input_, _ = _check_input(input_, kernel, 3, "conv2d_forward")
    output = _correlate2d(_pad2d(input_, kernel.padding), kernel.weights, kernel.stride)
    output += kernel.bias[:, None, None]
    return output


def conv2d_backward(input_, kernel: ConvKernel, upstream_grad):
    """
    :return: (grad_input, grad_weights, grad_bias)
    """
    input_, out_shape = _check_input(input_, kernel, 3, "conv2d_backward")
    upstream_grad = _check_upstream(upstream_grad, (kernel.out_channels,) + out_shape, "conv2d_backward")
    padded = _pad2d(input_, kernel.padding)
    windows = _windows2d(padded, kernel.kernel_shape, kernel.stride)
    grad_weights = np.tensordot(upstream_grad, windows, axes=([1, 2], [1, 2]))
    grad_bias = upstream_grad.sum(axis=(1, 2))
    columns = np.tensordot(kernel.weights, upstream_grad, axes=([0], [0]))
    grad_input = _crop2d(_scatter2d(columns, padded.shape, kernel.stride), kernel.padding, input_.shape)
    return grad_input, grad_weights, grad_bias


def _check_mask(mask, input_, operation):
    mask = as_tensor(mask, operation, "mask")
    check_rank(mask, 3, operation, "mask")
    if mask.shape[0] not in (1, input_.shape[0]) or mask.shape[1:] != input_.shape[1:]:
        raise ShapeMismatchError(operation, (1,) + input_.shape[1:], mask.shape)
    non_binary = (mask != 0.0) & (mask != 1.0)
    if np.any(non_binary):
        raise NonBinaryMaskError(operation, np.unique(mask[non_binary]).tolist())
    return mask


def _renormalization(mask, kernel: ConvKernel):
    """
    Per output window: ratio |K| / sum(M) where sum(M) > 0 (else 0), and the validity of the window.
    Padding counts as invalid
    """
    padded_mask = _pad2d(mask, kernel.padding)
    valid_count = _windows2d(padded_mask, kernel.kernel_shape, kernel.stride).sum(axis=(0, 3, 4))
    window_size = float(mask.shape[0] * kernel.kernel_shape[0] * kernel.kernel_shape[1])
    valid = valid_count > 0
    ratio = np.where(valid, window_size / np.where(valid, valid_count, 1.0), 0.0)
    return ratio, valid


def partial_conv2d_forward(input_, mask, kernel: ConvKernel):
    """
    Partial convolution: only cells with mask 1 enter a window, the window sum gets renormalized
    by |K| / sum(M). Windows without any valid cell output 0 and an updated mask of 0

    :param input_: (C_in, H, W)
    :param mask: (1, H, W) shared by all channels or (C_in, H, W) per channel, binary
    :return: (output (C_out, H', W'), updated_mask (1, H', W'))
    """
    input_, _ = _check_input(input_, kernel, 3, "partial_conv2d_forward")
    mask = _check_mask(mask, input_, "partial_conv2d_forward")
    masked_input = np.where(mask > 0, input_, 0.0)
    output = _correlate2d(_pad2d(masked_input, kernel.padding), kernel.weights, kernel.stride)
    ratio, valid = _renormalization(mask, kernel)
    output = output * ratio[None]
    output += kernel.bias[:, None, None]
    output = np.where(valid[None], output, 0.0)
    return output, valid[None].astype(np.float64)


def partial_conv2d_backward(input_, mask, kernel: ConvKernel, upstream_grad):
    """
    Gradients of partial_conv2d_forward with the mask held constant; holes get zero input gradient

    :return: (grad_input, grad_weights, grad_bias)
    """
    input_, out_shape = _check_input(input_, kernel, 3, "partial_conv2d_backward")
    mask = _check_mask(mask, input_, "partial_conv2d_backward")
    upstream_grad = _check_upstream(upstream_grad, (kernel.out_channels,) + out_shape, "partial_conv2d_backward")
    ratio, valid = _renormalization(mask, kernel)
    grad_raw = upstream_grad * ratio[None]
    grad_bias = np.where(valid[None], upstream_grad, 0.0).sum(axis=(1, 2))

    padded = _pad2d(np.where(mask > 0, input_, 0.0), kernel.padding)
    windows = _windows2d(padded, kernel.kernel_shape, kernel.stride)
    grad_weights = np.tensordot(grad_raw, windows, axes=([1, 2], [1, 2]))
    columns = np.tensordot(kernel.weights, grad_raw, axes=([0], [0]))
    grad_masked = _crop2d(_scatter2d(columns, padded.shape, kernel.stride), kernel.padding, input_.shape)
    grad_input = np.where(mask > 0, grad_masked, 0.0)
    return grad_input, grad_weights, grad_bias


def _pad1d(tensor, padding):
    if padding == 0:
        return tensor
    return np.pad(tensor, ((0, 0), (padding, padding)))


def _windows1d(padded, kernel_size, stride):
    """
    (C, Lo, k) view of padded
    """
    return sliding_window_view(padded, kernel_size, axis=1)[:, ::stride]


def conv1d_forward(input_, kernel: ConvKernel) -> Tensor:
    """
    Cross-correlation of (C_in, L) input with kernel plus bias; zero padding
    """
    input_, _ = _check_input(input_, kernel, 2, "conv1d_forward")
    windows = _windows1d(_pad1d(input_, kernel.padding), kernel.kernel_shape[0], kernel.stride)
    output = np.tensordot(kernel.weights, windows, axes=([1, 2], [0, 2]))
    output += kernel.bias[:, None]
    return output


def conv1d_backward(input_, kernel: ConvKernel, upstream_grad):
    """
    :return: (grad_input, grad_weights, grad_bias)
    """
    input_, out_shape = _check_input(input_, kernel, 2, "conv1d_backward")
    upstream_grad = _check_upstream(upstream_grad, (kernel.out_channels,) + out_shape, "conv1d_backward")
    kernel_size = kernel.kernel_shape[0]
    stride = kernel.stride
    padded = _pad1d(input_, kernel.padding)
    windows = _windows1d(padded, kernel_size, stride)
    grad_weights = np.tensordot(upstream_grad, windows, axes=([1], [1]))
    grad_bias = upstream_grad.sum(axis=1)
    columns = np.tensordot(kernel.weights, upstream_grad, axes=([0], [0]))
    out_length = out_shape[0]
    grad_padded = np.zeros(padded.shape)
    for j in range(kernel_size):
        grad_padded[:, j:j + stride * out_length:stride] += columns[:, j]
    grad_input = np.ascontiguousarray(grad_padded[:, kernel.padding:kernel.padding + input_.shape[1]])
    return grad_input, grad_weights, grad_bias
