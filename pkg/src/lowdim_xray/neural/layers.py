"""Layers with explicit forward and backward passes.

Dense layers take ``(batch, features)``; convolutional layers take
``(batch, channels, length)``. ``forward`` returns the output and whatever the
matching ``backward`` call needs; ``backward`` returns the input gradient and
the parameter gradients keyed like ``params``.
"""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError

Grads = dict[str, np.ndarray]


class Layer(ABC):
    """Abstract base for all layers."""

    kind: str = "layer"

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def init_params(self, rng: np.random.Generator) -> None:
        """Layers without weights have nothing to initialize."""

    @abstractmethod
    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        raise NotImplementedError

    @abstractmethod
    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        raise NotImplementedError

    def config(self) -> dict[str, Any]:
        return {}

    def describe(self) -> dict[str, Any]:
        return {"type": self.kind, **self.config()}


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features: int, out_features: int) -> None:
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params = {"weight": np.zeros((in_features, out_features)), "bias": np.zeros(out_features)}

    def init_params(self, rng: np.random.Generator) -> None:
        self.params["weight"] = _he_uniform(rng, (self.in_features, self.out_features), self.in_features)
        self.params["bias"] = np.zeros(self.out_features)

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"dense layer expects (batch, {self.in_features}), got {x.shape}")
        return x @ self.params["weight"] + self.params["bias"], x

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        x = cache
        grads = {"weight": x.T @ grad_out, "bias": grad_out.sum(axis=0)}
        return grad_out @ self.params["weight"].T, grads

    def config(self) -> dict[str, Any]:
        return {"in_features": self.in_features, "out_features": self.out_features}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        mask = x > 0.0
        return np.where(mask, x, 0.0), mask

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        return np.where(cache, grad_out, 0.0), {}


class BatchNorm(Layer):
    """Per-feature (dense input) or per-channel (conv input) batch normalization.

    Training mode normalizes with the biased batch variance and folds the batch
    statistics into the running ones; eval mode uses the running statistics.
    """

    kind = "batchnorm"

    def __init__(self, features: int, eps: float = 1e-5, momentum: float = 0.1) -> None:
        super().__init__()
        self.features = features
        self.eps = eps
        self.momentum = momentum
        self.params = {"gamma": np.ones(features), "beta": np.zeros(features)}
        self.buffers = {"running_mean": np.zeros(features), "running_var": np.ones(features)}

    def _axes(self, x: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if x.ndim == 2 and x.shape[1] == self.features:
            return (0,), (1, -1)
        if x.ndim == 3 and x.shape[1] == self.features:
            return (0, 2), (1, -1, 1)
        raise ShapeError(f"batch norm over {self.features} features got input of shape {x.shape}")

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        axes, shape = self._axes(x)
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.buffers["running_mean"] = (1.0 - self.momentum) * self.buffers["running_mean"] + self.momentum * mean
            self.buffers["running_var"] = (1.0 - self.momentum) * self.buffers["running_var"] + self.momentum * var
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
        out = self.params["gamma"].reshape(shape) * x_hat + self.params["beta"].reshape(shape)
        return out, (x_hat, inv_std, axes, shape, training)

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        x_hat, inv_std, axes, shape, training = cache
        grads = {"gamma": np.sum(grad_out * x_hat, axis=axes), "beta": np.sum(grad_out, axis=axes)}
        d_hat = grad_out * self.params["gamma"].reshape(shape)
        if not training:
            return d_hat * inv_std.reshape(shape), grads
        n = x_hat.size // self.features
        sum_d = np.sum(d_hat, axis=axes).reshape(shape)
        sum_dx = np.sum(d_hat * x_hat, axis=axes).reshape(shape)
        grad_in = inv_std.reshape(shape) / n * (n * d_hat - sum_d - x_hat * sum_dx)
        return grad_in, grads

    def config(self) -> dict[str, Any]:
        return {"features": self.features, "eps": self.eps, "momentum": self.momentum}


class Conv1d(Layer):
    """Cross-correlation with zero padding; weight shape ``(out_channels, in_channels, kernel)``."""

    kind = "conv1d"

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 1, padding: int = 1) -> None:
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.params = {
            "weight": np.zeros((out_channels, in_channels, kernel_size)),
            "bias": np.zeros(out_channels),
        }

    def output_length(self, length: int) -> int:
        return (length + 2 * self.padding - self.kernel_size) // self.stride + 1

    def init_params(self, rng: np.random.Generator) -> None:
        shape = (self.out_channels, self.in_channels, self.kernel_size)
        self.params["weight"] = _he_uniform(rng, shape, self.in_channels * self.kernel_size)
        self.params["bias"] = np.zeros(self.out_channels)

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(f"conv1d expects (batch, {self.in_channels}, length), got {x.shape}")
        padded = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding)))
        windows = sliding_window_view(padded, self.kernel_size, axis=2)[:, :, :: self.stride, :]
        out = np.einsum("bilk,oik->bol", windows, self.params["weight"]) + self.params["bias"][None, :, None]
        return out, (windows, padded.shape)

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        windows, padded_shape = cache
        grads = {
            "weight": np.einsum("bilk,bol->oik", windows, grad_out),
            "bias": grad_out.sum(axis=(0, 2)),
        }
        d_windows = np.einsum("bol,oik->bilk", grad_out, self.params["weight"])
        d_padded = np.zeros(padded_shape)
        n_out = grad_out.shape[2]
        stop = self.stride * (n_out - 1) + 1
        for j in range(self.kernel_size):
            d_padded[:, :, j : j + stop : self.stride] += d_windows[:, :, :, j]
        length = padded_shape[2] - 2 * self.padding
        return d_padded[:, :, self.padding : self.padding + length], grads

    def config(self) -> dict[str, Any]:
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "padding": self.padding,
        }


class ConvTranspose1d(Layer):
    """Adjoint of a strided ``Conv1d``, cropped or zero-extended to ``out_len``.

    Weight shape is ``(in_channels, out_channels, kernel)``.
    """

    kind = "conv_transpose1d"

    def __init__(
        self, in_channels: int, out_channels: int, kernel_size: int, stride: int, padding: int, out_len: int
    ) -> None:
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.out_len = out_len
        self.params = {
            "weight": np.zeros((in_channels, out_channels, kernel_size)),
            "bias": np.zeros(out_channels),
        }

    def init_params(self, rng: np.random.Generator) -> None:
        shape = (self.in_channels, self.out_channels, self.kernel_size)
        self.params["weight"] = _he_uniform(rng, shape, self.in_channels * self.kernel_size)
        self.params["bias"] = np.zeros(self.out_channels)

    def _full_length(self, length: int) -> int:
        return max(self.stride * (length - 1) + self.kernel_size, self.padding + self.out_len)

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(f"conv_transpose1d expects (batch, {self.in_channels}, length), got {x.shape}")
        length = x.shape[2]
        full = np.zeros((x.shape[0], self.out_channels, self._full_length(length)))
        stop = self.stride * (length - 1) + 1
        for j in range(self.kernel_size):
            full[:, :, j : j + stop : self.stride] += np.einsum("bil,io->bol", x, self.params["weight"][:, :, j])
        out = full[:, :, self.padding : self.padding + self.out_len] + self.params["bias"][None, :, None]
        return out, x

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        x = cache
        length = x.shape[2]
        d_full = np.zeros((x.shape[0], self.out_channels, self._full_length(length)))
        d_full[:, :, self.padding : self.padding + self.out_len] = grad_out
        stop = self.stride * (length - 1) + 1
        grad_in = np.zeros_like(x)
        d_weight = np.zeros_like(self.params["weight"])
        for j in range(self.kernel_size):
            g = d_full[:, :, j : j + stop : self.stride]
            grad_in += np.einsum("bol,io->bil", g, self.params["weight"][:, :, j])
            d_weight[:, :, j] = np.einsum("bil,bol->io", x, g)
        return grad_in, {"weight": d_weight, "bias": grad_out.sum(axis=(0, 2))}

    def config(self) -> dict[str, Any]:
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "padding": self.padding,
            "out_len": self.out_len,
        }


class MaxPool1d(Layer):
    """Non-overlapping max pooling; a trailing partial window is dropped."""

    kind = "maxpool1d"

    def __init__(self, size: int = 2) -> None:
        super().__init__()
        self.size = size

    def output_length(self, length: int) -> int:
        return length // self.size

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        if x.ndim != 3:
            raise ShapeError(f"maxpool1d expects (batch, channels, length), got {x.shape}")
        n_out = self.output_length(x.shape[2])
        if n_out < 1:
            raise ShapeError(f"maxpool1d of size {self.size} cannot pool length {x.shape[2]}")
        windows = x[:, :, : n_out * self.size].reshape(x.shape[0], x.shape[1], n_out, self.size)
        argmax = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
        return out, (x.shape, argmax)

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        shape, argmax = cache
        n_out = argmax.shape[2]
        d_windows = np.zeros((shape[0], shape[1], n_out, self.size))
        np.put_along_axis(d_windows, argmax[..., None], grad_out[..., None], axis=-1)
        grad_in = np.zeros(shape)
        grad_in[:, :, : n_out * self.size] = d_windows.reshape(shape[0], shape[1], n_out * self.size)
        return grad_in, {}

    def config(self) -> dict[str, Any]:
        return {"size": self.size}


class Upsample1d(Layer):
    """Nearest-neighbour upsampling to a fixed length."""

    kind = "upsample1d"

    def __init__(self, out_len: int) -> None:
        super().__init__()
        self.out_len = out_len

    def _source(self, length: int) -> np.ndarray:
        return (np.arange(self.out_len) * length) // self.out_len

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        if x.ndim != 3:
            raise ShapeError(f"upsample1d expects (batch, channels, length), got {x.shape}")
        source = self._source(x.shape[2])
        return x[:, :, source], (x.shape, source)

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        shape, source = cache
        grad_in = np.zeros(shape)
        np.add.at(grad_in.transpose(2, 0, 1), source, grad_out.transpose(2, 0, 1))
        return grad_in, {}

    def config(self) -> dict[str, Any]:
        return {"out_len": self.out_len}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        return grad_out.reshape(cache), {}


class Reshape(Layer):
    """``(batch, channels * length)`` to ``(batch, channels, length)``."""

    kind = "reshape"

    def __init__(self, channels: int, length: int) -> None:
        super().__init__()
        self.channels = channels
        self.length = length

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, Any]:
        if x.ndim != 2 or x.shape[1] != self.channels * self.length:
            raise ShapeError(f"reshape to ({self.channels}, {self.length}) got input of shape {x.shape}")
        return x.reshape(x.shape[0], self.channels, self.length), x.shape

    def backward(self, cache: Any, grad_out: np.ndarray) -> tuple[np.ndarray, Grads]:
        return grad_out.reshape(cache), {}

    def config(self) -> dict[str, Any]:
        return {"channels": self.channels, "length": self.length}


