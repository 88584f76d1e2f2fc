"""
The three neural imputers. All of them take a 168 x 52 matrix and its mask and return a 168 x 52
prediction, so the loss is always computed on the original grid
"""
from abc import ABCMeta, abstractmethod

import numpy as np

from common import settings
from common.exceptions import ValidationError
from common.helper import rng_for
from dataset.image import IMAGE_SHAPE, to_grid, flatten_image, resize_bilinear, resize_mask_nearest, sample_back, sample_back_operators
from models.layers import Conv1d, Conv2d, PartialConv2d, Dense, MaxPool2d, Upsample1d, Upsample2d, ReLU, LeakyReLU, Sigmoid
from models.models_exceptions import CheckpointError, UnknownArchitectureError
from numeric import pooling
from numeric.tensor import output_size


class Network(object, metaclass=ABCMeta):
    architecture = None
    settings_section = None

    def __init__(self, config=None):
        if config is None:
            config = settings.Settings._to_dict(getattr(settings.Settings().Models, self.settings_section))
        self.config = dict(config)
        self.layers = []
        self._build()

    def _add(self, layer):
        self.layers.append(layer)
        return layer

    @abstractmethod
    def _build(self):
        pass

    def initialize(self, seed):
        for layer in self.layers:
            layer.initialize(rng_for(seed, "init", self.architecture, layer.name))

    def parameters(self) -> dict:
        named = {}
        for layer in self.layers:
            named.update(layer.named_parameters())
        return named

    def parameter_shapes(self) -> dict:
        return {f"{layer.name}.{key}": tuple(shape) for layer in self.layers for key, shape in layer.parameter_shapes().items()}

    def parameter_count(self) -> int:
        return int(sum(np.prod(shape) for shape in self.parameter_shapes().values()))

    def set_parameters(self, values: dict):
        """
        Copies given arrays into the layer parameters, names and shapes must match exactly
        """
        shapes = self.parameter_shapes()
        if set(values) != set(shapes):
            raise CheckpointError(f"{self.architecture}: parameter names differ. Expected: {sorted(shapes)}, actual {sorted(values)}")
        for layer in self.layers:
            for key, shape in layer.parameter_shapes().items():
                value = np.asarray(values[f"{layer.name}.{key}"], dtype=np.float64)
                if value.shape != tuple(shape):
                    raise CheckpointError(f"{layer.name}.{key}: shape mismatch. Expected: {tuple(shape)}, actual {value.shape}")
                if key in layer.params:
                    layer.params[key][...] = value
                else:
                    layer.params[key] = value.copy()

    def describe(self) -> list:
        return [layer.describe() for layer in self.layers]

    @staticmethod
    def _forward_sequence(layers, input_):
        caches = []
        for layer in layers:
            input_, cache = layer.forward(input_)
            caches.append(cache)
        return input_, caches

    @staticmethod
    def _backward_sequence(layers, caches, upstream_grad, grads):
        for layer, cache in zip(reversed(layers), reversed(caches)):
            upstream_grad, layer_grads = layer.backward(cache, upstream_grad)
            grads.update(layer_grads)
        return upstream_grad

    def forward(self, matrix, mask):
        """
        :param matrix: 168 x 52 normalized values, hole cells are ignored
        :param mask: 168 x 52, 1 = observed
        :return: (prediction 168 x 52 in [0, 1], cache for backward)
        """
        matrix = np.asarray(matrix, dtype=np.float64)
        mask = np.asarray(mask, dtype=np.float64)
        if matrix.shape != IMAGE_SHAPE or mask.shape != IMAGE_SHAPE:
            raise ValidationError(f"{self.architecture}: input shape. Expected: {IMAGE_SHAPE}, actual {matrix.shape} and {mask.shape}")
        return self._forward(np.where(mask > 0, matrix, 0.0), mask)

    def predict(self, matrix, mask) -> np.ndarray:
        return self.forward(matrix, mask)[0]

    @abstractmethod
    def _forward(self, inputs, mask):
        pass

    @abstractmethod
    def backward(self, grad_pred, cache) -> dict:
        """
        :return: gradients of all parameters, keyed like parameters()
        """


def _halvings(size, count, architecture):
    if size % (2 ** count):
        raise ValidationError(f"{architecture}: size {size} can't be halved {count} times")
    return size // 2 ** count


class AE1D(Network):
    """
    Autoencoder over the flattened year (1 x 8736): strided conv1d encoder, dense bottleneck,
    upsampling conv1d decoder
    """
    architecture = "ae1d"
    settings_section = "AE1D"

    def _build(self):
        channels = [1] + list(self.config["Channels"])
        kernel = int(self.config["Kernel"])
        length = IMAGE_SHAPE[0] * IMAGE_SHAPE[1]
        self.encoder = []
        for index in range(len(channels) - 1):
            self.encoder.append(self._add(Conv1d(f"encoder{index}", channels[index], channels[index + 1], kernel, stride=2)))
            self.encoder.append(self._add(ReLU(f"encoder{index}_relu")))
            length = output_size(length, kernel, 2, kernel // 2)
        if length * 2 ** (len(channels) - 1) != IMAGE_SHAPE[0] * IMAGE_SHAPE[1]:
            raise ValidationError(f"ae1d: series length can't be halved {len(channels) - 1} times")
        self.code_shape = (channels[-1], length)
        flat = channels[-1] * length
        bottleneck = int(self.config["Bottleneck"])
        self.bottleneck = [self._add(Dense("bottleneck_in", flat, bottleneck)), self._add(ReLU("bottleneck_in_relu")),
                           self._add(Dense("bottleneck_out", bottleneck, flat)), self._add(ReLU("bottleneck_out_relu"))]

        decoder_channels = channels[::-1][:-1] + [channels[1]]
        self.decoder = []
        for index in range(len(decoder_channels) - 1):
            self.decoder.append(self._add(Upsample1d(f"decoder{index}_up")))
            self.decoder.append(self._add(Conv1d(f"decoder{index}", decoder_channels[index], decoder_channels[index + 1], kernel)))
            self.decoder.append(self._add(ReLU(f"decoder{index}_relu")))
        self.decoder.append(self._add(Conv1d("head", decoder_channels[-1], 1, kernel)))
        self.decoder.append(self._add(Sigmoid("head_sigmoid")))

    def _forward(self, inputs, mask):
        code, encoder_caches = self._forward_sequence(self.encoder, flatten_image(inputs)[None])
        latent, bottleneck_caches = self._forward_sequence(self.bottleneck, code.reshape(-1))
        output, decoder_caches = self._forward_sequence(self.decoder, latent.reshape(self.code_shape))
        return to_grid(output[0]), (encoder_caches, bottleneck_caches, decoder_caches)

    def backward(self, grad_pred, cache) -> dict:
        encoder_caches, bottleneck_caches, decoder_caches = cache
        grads = {}
        grad = self._backward_sequence(self.decoder, decoder_caches, flatten_image(grad_pred)[None], grads)
        grad = self._backward_sequence(self.bottleneck, bottleneck_caches, grad.reshape(-1), grads)
        self._backward_sequence(self.encoder, encoder_caches, grad.reshape(self.code_shape), grads)
        return grads


class AE2D(Network):
    """
    Autoencoder over the 1 x 168 x 52 image: conv/relu/maxpool encoder, dense bottleneck, upsampling conv decoder
    """
    architecture = "ae2d"
    settings_section = "AE2D"

    def _build(self):
        channels = [1] + list(self.config["Channels"])
        kernel = int(self.config["Kernel"])
        stages = len(channels) - 1
        self.encoder = []
        for index in range(stages):
            self.encoder.append(self._add(Conv2d(f"encoder{index}", channels[index], channels[index + 1], kernel)))
            self.encoder.append(self._add(ReLU(f"encoder{index}_relu")))
            self.encoder.append(self._add(MaxPool2d(f"encoder{index}_pool")))
        self.code_shape = (channels[-1], _halvings(IMAGE_SHAPE[0], stages, "ae2d"), _halvings(IMAGE_SHAPE[1], stages, "ae2d"))
        flat = int(np.prod(self.code_shape))
        bottleneck = int(self.config["Bottleneck"])
        self.bottleneck = [self._add(Dense("bottleneck_in", flat, bottleneck)), self._add(ReLU("bottleneck_in_relu")),
                           self._add(Dense("bottleneck_out", bottleneck, flat)), self._add(ReLU("bottleneck_out_relu"))]

        decoder_channels = channels[::-1][:-1] + [channels[1]]
        self.decoder = []
        for index in range(stages):
            self.decoder.append(self._add(Upsample2d(f"decoder{index}_up")))
            self.decoder.append(self._add(Conv2d(f"decoder{index}", decoder_channels[index], decoder_channels[index + 1], kernel)))
            self.decoder.append(self._add(ReLU(f"decoder{index}_relu")))
        self.decoder.append(self._add(Conv2d("head", decoder_channels[-1], 1, kernel)))
        self.decoder.append(self._add(Sigmoid("head_sigmoid")))

    def _forward(self, inputs, mask):
        code, encoder_caches = self._forward_sequence(self.encoder, inputs[None])
        latent, bottleneck_caches = self._forward_sequence(self.bottleneck, code.reshape(-1))
        output, decoder_caches = self._forward_sequence(self.decoder, latent.reshape(self.code_shape))
        return output[0], (encoder_caches, bottleneck_caches, decoder_caches)

    def backward(self, grad_pred, cache) -> dict:
        encoder_caches, bottleneck_caches, decoder_caches = cache
        grads = {}
        grad = self._backward_sequence(self.decoder, decoder_caches, np.asarray(grad_pred)[None], grads)
        grad = self._backward_sequence(self.bottleneck, bottleneck_caches, grad.reshape(-1), grads)
        self._backward_sequence(self.encoder, encoder_caches, grad.reshape(self.code_shape), grads)
        return grads


def masked_resize(matrix, mask, size):
    """
    Bilinear resize that only blends observed cells: resize(x * m) / resize(m), 0 where no observed cell contributes
    """
    numerator = resize_bilinear(matrix * mask, size)
    denominator = resize_bilinear(mask, size)
    covered = denominator > 1e-12
    return np.where(covered, numerator / np.where(covered, denominator, 1.0), 0.0)


class PConvUNet(Network):
    """
    U-Net of partial convolutions on the resized square grid. Every encoder stage halves the grid and
    hands (features, mask) to the decoder stage of the same size; decoder stages upsample features and
    mask, concatenate the skip features with their per-channel masks and apply a stride-1 partial convolution
    """
    architecture = "pconv"
    settings_section = "PConv"

    def _build(self):
        channels = [1] + list(self.config["Channels"])
        kernels = list(self.config["Kernels"])
        if len(kernels) != len(channels) - 1:
            raise ValidationError(f"pconv: {len(channels) - 1} encoder channels but {len(kernels)} kernels")
        self.size = int(self.config["ImageSize"])
        decoder_kernel = int(self.config["DecoderKernel"])
        alpha = float(self.config["LeakyAlpha"])

        self.sizes = [self.size]
        self.encoder = []
        for index, kernel in enumerate(kernels):
            pconv = self._add(PartialConv2d(f"encoder{index}", channels[index], channels[index + 1], kernel, stride=2))
            self.encoder.append((pconv, self._add(ReLU(f"encoder{index}_relu"))))
            self.sizes.append(output_size(self.sizes[-1], kernel, 2, kernel // 2))
        for level in range(len(kernels)):
            if self.sizes[level + 1] * 2 != self.sizes[level]:
                raise ValidationError(f"pconv: grid sizes {self.sizes} don't halve exactly")

        self.decoder = []
        current = channels[-1]
        for level in reversed(range(len(kernels))):
            out_channels = channels[level] if level > 0 else channels[1]
            pconv = self._add(PartialConv2d(f"decoder{level}", current + channels[level], out_channels, decoder_kernel))
            self.decoder.append((level, pconv, self._add(LeakyReLU(f"decoder{level}_leaky", alpha))))
            current = out_channels
        self.head = self._add(Conv2d("head", current, 1, 1, padding=0))
        self.head_sigmoid = self._add(Sigmoid("head_sigmoid"))

    def _forward(self, inputs, mask):
        grid_mask = resize_mask_nearest(mask, self.size)[None].astype(np.float64)
        grid = masked_resize(inputs, mask, self.size)[None] * grid_mask
        levels = [(grid, grid_mask)]
        encoder_caches = []
        for pconv, relu in self.encoder:
            (features, level_mask), pconv_cache = pconv.forward(levels[-1])
            features, relu_cache = relu.forward(features)
            encoder_caches.append((pconv_cache, relu_cache))
            levels.append((features, level_mask))

        features, level_mask = levels[-1]
        decoder_caches = []
        masks = [level_mask for _, level_mask in levels]
        for level, pconv, leaky in self.decoder:
            skip_features, skip_mask = levels[level]
            up_features = pooling.nearest_upsample2d(features)
            up_mask = pooling.nearest_upsample2d(level_mask)
            stacked = np.concatenate((up_features, skip_features))
            stacked_mask = np.concatenate((np.repeat(up_mask, up_features.shape[0], axis=0), np.repeat(skip_mask, skip_features.shape[0], axis=0)))
            (features, level_mask), pconv_cache = pconv.forward((stacked, stacked_mask))
            features, leaky_cache = leaky.forward(features)
            decoder_caches.append((up_features.shape[0], pconv_cache, leaky_cache))
            masks.append(level_mask)

        logits, head_cache = self.head.forward(features)
        output, sigmoid_cache = self.head_sigmoid.forward(logits)
        prediction = sample_back(output[0], IMAGE_SHAPE)
        return prediction, {"encoder": encoder_caches, "decoder": decoder_caches, "head": (head_cache, sigmoid_cache), "masks": masks}

    def backward(self, grad_pred, cache) -> dict:
        grads = {}
        rows, cols = sample_back_operators(self.size, IMAGE_SHAPE)
        grad = (rows.T @ np.asarray(grad_pred) @ cols)[None]
        head_cache, sigmoid_cache = cache["head"]
        grad, _ = self.head_sigmoid.backward(sigmoid_cache, grad)
        grad, head_grads = self.head.backward(head_cache, grad)
        grads.update(head_grads)

        skip_grads = {}
        for (level, pconv, leaky), (up_channels, pconv_cache, leaky_cache) in zip(reversed(self.decoder), reversed(cache["decoder"])):
            grad, _ = leaky.backward(leaky_cache, grad)
            grad, pconv_grads = pconv.backward(pconv_cache, grad)
            grads.update(pconv_grads)
            skip_grads[level] = grad[up_channels:]
            grad = pooling.nearest_upsample2d_backward(grad[:up_channels])

        for index in reversed(range(len(self.encoder))):
            pconv, relu = self.encoder[index]
            pconv_cache, relu_cache = cache["encoder"][index]
            grad, _ = relu.backward(relu_cache, grad)
            grad, pconv_grads = pconv.backward(pconv_cache, grad)
            grads.update(pconv_grads)
            if index > 0:
                grad = grad + skip_grads[index]
        return grads


NETWORKS = {network.architecture: network for network in (AE1D, AE2D, PConvUNet)}


def build_network(architecture, config=None, seed=None) -> Network:
    """
    :param seed: initializes the parameters if given
    """
    if architecture not in NETWORKS:
        raise UnknownArchitectureError(architecture)
    network = NETWORKS[architecture](config)
    if seed is not None:
        network.initialize(seed)
    return network
