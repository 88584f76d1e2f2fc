"""
Tensors are plain numpy float64 arrays. This module holds the checks every operation shares
and the binary GFT1 format used by checkpoints and the processed store:

    magic "GFT1" | rank: u32 | dims: rank x u32 | payload: prod(dims) x float64

all little-endian
"""
import struct

import numpy as np

from numeric.numeric_exceptions import ShapeMismatchError, NonFiniteError, TensorFormatError

Tensor = np.ndarray

MAGIC = b"GFT1"
DTYPE = np.dtype("<f8")


def as_tensor(data, operation="as_tensor", name="input") -> Tensor:
    """
    Returns given data as contiguous float64 array, raises NonFiniteError on NaN/Inf
    """
    tensor = np.ascontiguousarray(data, dtype=np.float64)
    check_finite(tensor, operation, name)
    return tensor


def check_finite(tensor, operation, name="input"):
    if not np.all(np.isfinite(tensor)):
        raise NonFiniteError(operation, name)


def check_shape(tensor, expected_shape, operation):
    if tuple(tensor.shape) != tuple(expected_shape):
        raise ShapeMismatchError(operation, expected_shape, tensor.shape)


def check_rank(tensor, rank, operation, name="input"):
    if tensor.ndim != rank:
        raise ShapeMismatchError(operation, (f"rank {rank} {name}",), tensor.shape)


def output_size(size, kernel, stride, padding) -> int:
    """
    floor((in + 2*pad - k) / stride) + 1
    """
    return (size + 2 * padding - kernel) // stride + 1


def tensor_to_bytes(tensor) -> bytes:
    tensor = np.ascontiguousarray(tensor, dtype=DTYPE)
    header = MAGIC + struct.pack("<I", tensor.ndim) + struct.pack(f"<{tensor.ndim}I", *tensor.shape)
    return header + tensor.tobytes(order="C")


def tensor_from_bytes(buffer, offset=0):
    """
    Decodes one tensor starting at offset

    :return: (tensor, offset right behind it)
    """
    if buffer[offset:offset + 4] != MAGIC:
        raise TensorFormatError(f"Wrong magic at byte {offset}: {bytes(buffer[offset:offset + 4])!r}")
    offset += 4
    if len(buffer) < offset + 4:
        raise TensorFormatError("Truncated tensor header")
    (rank,) = struct.unpack_from("<I", buffer, offset)
    offset += 4
    if len(buffer) < offset + 4 * rank:
        raise TensorFormatError("Truncated tensor dimensions")
    shape = struct.unpack_from(f"<{rank}I", buffer, offset)
    offset += 4 * rank
    count = int(np.prod(shape, dtype=np.int64))
    end = offset + 8 * count
    if len(buffer) < end:
        raise TensorFormatError(f"Truncated payload: expected {8 * count} bytes, got {len(buffer) - offset}")
    tensor = np.frombuffer(buffer, dtype=DTYPE, count=count, offset=offset).reshape(shape).astype(np.float64)
    return tensor, end


def save_tensors(tensors) -> bytes:
    return b"".join(tensor_to_bytes(tensor) for tensor in tensors)


def load_tensors(buffer) -> list:
    tensors = []
    offset = 0
    while offset < len(buffer):
        tensor, offset = tensor_from_bytes(buffer, offset)
        tensors.append(tensor)
    return tensors


def global_norm_clip(grads: dict, max_norm):
    """
    Scales all gradients together so that their joint L2 norm is at most max_norm.
    Returns the norm before clipping; max_norm None disables clipping
    """
    norm = float(np.sqrt(sum(float(np.sum(grad * grad)) for grad in grads.values())))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * scale
    return norm
