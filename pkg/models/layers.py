"""
Layers own their parameter arrays. forward returns (output, cache), backward takes that cache and
returns (gradient for the input, gradients of the own parameters keyed "<layer>.<parameter>")
"""
from abc import ABCMeta, abstractmethod

import numpy as np

from numeric import activations, conv, dense, pooling


class Layer(object, metaclass=ABCMeta):
    layer_type = None

    def __init__(self, name):
        self.name = name
        self.params = {}

    def parameter_shapes(self) -> dict:
        return {}

    def initialize(self, rng):
        """
        He-uniform weights, zero biases
        """
        for key, shape in self.parameter_shapes().items():
            if key == "bias":
                self.params[key] = np.zeros(shape)
            else:
                fan_in = int(np.prod(shape[1:]))
                bound = np.sqrt(6.0 / fan_in)
                self.params[key] = rng.uniform(-bound, bound, size=shape)

    def named_parameters(self) -> dict:
        return {f"{self.name}.{key}": value for key, value in self.params.items()}

    def _named(self, **grads) -> dict:
        return {f"{self.name}.{key}": value for key, value in grads.items()}

    def describe(self) -> dict:
        return {"name": self.name, "type": self.layer_type}

    @abstractmethod
    def forward(self, input_):
        pass

    @abstractmethod
    def backward(self, cache, upstream_grad):
        pass


class _ConvLayer(Layer, metaclass=ABCMeta):
    rank = None

    def __init__(self, name, in_channels, out_channels, kernel_size, stride=1, padding=None):
        super().__init__(name)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding

    def parameter_shapes(self) -> dict:
        return {"weights": (self.out_channels, self.in_channels) + (self.kernel_size,) * self.rank, "bias": (self.out_channels,)}

    def kernel(self) -> conv.ConvKernel:
        return conv.ConvKernel(self.params["weights"], self.params["bias"], stride=self.stride, padding=self.padding)

    def describe(self) -> dict:
        return dict(super().describe(), in_channels=self.in_channels, out_channels=self.out_channels,
                    kernel=self.kernel_size, stride=self.stride, padding=self.padding)


class Conv1d(_ConvLayer):
    layer_type = "conv1d"
    rank = 1

    def forward(self, input_):
        return conv.conv1d_forward(input_, self.kernel()), input_

    def backward(self, cache, upstream_grad):
        grad_input, grad_weights, grad_bias = conv.conv1d_backward(cache, self.kernel(), upstream_grad)
        return grad_input, self._named(weights=grad_weights, bias=grad_bias)


class Conv2d(_ConvLayer):
    layer_type = "conv2d"
    rank = 2

    def forward(self, input_):
        return conv.conv2d_forward(input_, self.kernel()), input_

    def backward(self, cache, upstream_grad):
        grad_input, grad_weights, grad_bias = conv.conv2d_backward(cache, self.kernel(), upstream_grad)
        return grad_input, self._named(weights=grad_weights, bias=grad_bias)


class PartialConv2d(_ConvLayer):
    """
    forward takes (input, mask) and returns ((output, updated mask), cache)
    """
    layer_type = "partial_conv2d"
    rank = 2

    def forward(self, inputs):
        input_, mask = inputs
        output, updated_mask = conv.partial_conv2d_forward(input_, mask, self.kernel())
        return (output, updated_mask), (input_, mask)

    def backward(self, cache, upstream_grad):
        input_, mask = cache
        grad_input, grad_weights, grad_bias = conv.partial_conv2d_backward(input_, mask, self.kernel(), upstream_grad)
        return grad_input, self._named(weights=grad_weights, bias=grad_bias)


class Dense(Layer):
    layer_type = "dense"

    def __init__(self, name, in_features, out_features):
        super().__init__(name)
        self.in_features = in_features
        self.out_features = out_features

    def parameter_shapes(self) -> dict:
        return {"weights": (self.out_features, self.in_features), "bias": (self.out_features,)}

    def forward(self, input_):
        return dense.dense_forward(input_, self.params["weights"], self.params["bias"]), input_

    def backward(self, cache, upstream_grad):
        grad_input, grad_weights, grad_bias = dense.dense_backward(cache, self.params["weights"], self.params["bias"], upstream_grad)
        return grad_input, self._named(weights=grad_weights, bias=grad_bias)

    def describe(self) -> dict:
        return dict(super().describe(), in_features=self.in_features, out_features=self.out_features)


class MaxPool2d(Layer):
    layer_type = "maxpool2d"

    def __init__(self, name, window=2, stride=2):
        super().__init__(name)
        self.window = window
        self.stride = stride

    def forward(self, input_):
        output, argmax = pooling.maxpool2d(input_, self.window, self.stride)
        return output, (argmax, input_.shape)

    def backward(self, cache, upstream_grad):
        argmax, input_shape = cache
        return pooling.maxpool2d_backward(upstream_grad, argmax, input_shape, self.window, self.stride), {}

    def describe(self) -> dict:
        return dict(super().describe(), window=self.window, stride=self.stride)


class Upsample2d(Layer):
    layer_type = "upsample2d"

    def __init__(self, name, factor=2):
        super().__init__(name)
        self.factor = factor

    def forward(self, input_):
        return pooling.nearest_upsample2d(input_, self.factor), None

    def backward(self, cache, upstream_grad):
        return pooling.nearest_upsample2d_backward(upstream_grad, self.factor), {}

    def describe(self) -> dict:
        return dict(super().describe(), factor=self.factor)


class Upsample1d(Upsample2d):
    layer_type = "upsample1d"

    def forward(self, input_):
        return pooling.nearest_upsample1d(input_, self.factor), None

    def backward(self, cache, upstream_grad):
        return pooling.nearest_upsample1d_backward(upstream_grad, self.factor), {}


class ReLU(Layer):
    layer_type = "relu"

    def forward(self, input_):
        return activations.relu(input_), input_

    def backward(self, cache, upstream_grad):
        return activations.relu_backward(cache, upstream_grad), {}


class LeakyReLU(Layer):
    layer_type = "leaky_relu"

    def __init__(self, name, alpha=0.2):
        super().__init__(name)
        self.alpha = alpha

    def forward(self, input_):
        return activations.leaky_relu(input_, self.alpha), input_

    def backward(self, cache, upstream_grad):
        return activations.leaky_relu_backward(cache, upstream_grad, self.alpha), {}

    def describe(self) -> dict:
        return dict(super().describe(), alpha=self.alpha)


class Sigmoid(Layer):
    layer_type = "sigmoid"

    def forward(self, input_):
        return activations.sigmoid(input_), input_

    def backward(self, cache, upstream_grad):
        return activations.sigmoid_backward(cache, upstream_grad), {}
