"""Autoencoder architectures assembled from layers, with forward/backward over the whole stack."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import NumericalError, ParseError, ShapeError, StaleCacheError, ValidationError
from ..models.base import SpectralModel
from ..utils import FORMAT_VERSION
from .layers import (
    BatchNorm,
    Conv1d,
    ConvTranspose1d,
    Dense,
    Flatten,
    Grads,
    Layer,
    MaxPool1d,
    ReLU,
    Reshape,
    Upsample1d,
)

logger = logging.getLogger(__name__)


class ArchKind(str, Enum):
    FCNN1 = "FCNN1"
    FCNN2 = "FCNN2"
    FCNN3 = "FCNN3"
    CNN1 = "CNN1"
    CNN2 = "CNN2"
    CNN2_DEEP = "CNN2_DEEP"


# hidden widths for the dense nets, channels per stage for the conv nets
DEFAULT_WIDTHS: dict[ArchKind, tuple[int, ...]] = {
    ArchKind.FCNN1: (16,),
    ArchKind.FCNN2: (13, 16, 8),
    ArchKind.FCNN3: (16, 8),
    ArchKind.CNN1: (8, 16),
    ArchKind.CNN2: (8, 16),
    ArchKind.CNN2_DEEP: (8, 16, 16, 32),
}


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class NetworkArch(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ArchKind
    input_len: int = Field(default=26, ge=2)
    latent_dim: int = Field(default=5, ge=1)
    widths: tuple[int, ...] | None = None
    kernel_size: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _check_widths(self) -> "NetworkArch":
        if self.widths is not None and (not self.widths or any(w < 1 for w in self.widths)):
            raise ValueError(f"widths must be positive, got {self.widths}")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd so 'same' convolutions keep their length")
        return self

    @property
    def resolved_widths(self) -> tuple[int, ...]:
        return self.widths if self.widths is not None else DEFAULT_WIDTHS[self.kind]


def _dense_stack(arch: NetworkArch) -> tuple[list[Layer], int]:
    n, latent, widths = arch.input_len, arch.latent_dim, arch.resolved_widths
    if arch.kind is ArchKind.FCNN1:
        hidden = widths[0]
        # linear code, one hidden ReLU layer on each side
        layers: list[Layer] = [Dense(n, hidden), ReLU(), Dense(hidden, latent), Dense(latent, hidden), ReLU(), Dense(hidden, n)]
        return layers, 2

    layers = []
    previous = n
    for width in widths:
        layers += [Dense(previous, width), BatchNorm(width), ReLU()]
        previous = width
    layers.append(Dense(previous, latent))
    code_index = len(layers) - 1
    previous = latent
    for width in reversed(widths):
        layers += [Dense(previous, width), BatchNorm(width), ReLU()]
        previous = width
    layers.append(Dense(previous, n))
    return layers, code_index


def _conv_stack(arch: NetworkArch) -> tuple[list[Layer], int]:
    n, latent, channels, k = arch.input_len, arch.latent_dim, arch.resolved_widths, arch.kernel_size
    pad = k // 2
    strided = arch.kind is ArchKind.CNN1

    layers: list[Layer] = [Reshape(1, n)]
    lengths = [n]
    previous = 1
    for ch in channels:
        if strided:
            conv = Conv1d(previous, ch, k, stride=2, padding=pad)
            layers += [conv, BatchNorm(ch), ReLU()]
            lengths.append(conv.output_length(lengths[-1]))
        else:
            pool = MaxPool1d(2)
            layers += [Conv1d(previous, ch, k, stride=1, padding=pad), BatchNorm(ch), ReLU(), pool]
            lengths.append(pool.output_length(lengths[-1]))
        if lengths[-1] < 1:
            raise ValidationError(f"{arch.kind.value}: input of {n} bins is too short for {len(channels)} stages")
        previous = ch

    flat = previous * lengths[-1]
    layers += [Flatten(), Dense(flat, latent)]
    code_index = len(layers) - 1
    layers += [Dense(latent, flat), ReLU(), Reshape(previous, lengths[-1])]

    # decoder mirrors the encoder stage by stage; the last stage emits one channel, linearly
    targets = list(reversed(channels[:-1])) + [1]
    for stage, out_ch in enumerate(targets):
        out_len = lengths[-2 - stage]
        last = stage == len(targets) - 1
        if strided:
            layers.append(ConvTranspose1d(previous, out_ch, k, stride=2, padding=pad, out_len=out_len))
        else:
            layers += [Upsample1d(out_len), Conv1d(previous, out_ch, k, stride=1, padding=pad)]
        if not last:
            layers += [BatchNorm(out_ch), ReLU()]
        previous = out_ch
    layers.append(Flatten())
    return layers, code_index


def build_layers(arch: NetworkArch) -> tuple[list[Layer], int]:
    """Uninitialized layer stack for ``arch`` and the index of the layer whose output is the code."""
    if arch.kind in (ArchKind.FCNN1, ArchKind.FCNN2, ArchKind.FCNN3):
        return _dense_stack(arch)
    return _conv_stack(arch)


@dataclass
class ForwardCache:
    caches: list[Any]
    params_version: int
    training: bool


class Network(SpectralModel):
    """An autoencoder: its architecture, layer parameters and batch-norm running statistics.

    ``params_version`` changes whenever parameters are modified, which
    invalidates earlier forward caches.
    """

    kind = "network"

    def __init__(self, arch: NetworkArch, layers: list[Layer] | None = None, code_index: int | None = None) -> None:
        if layers is None:
            layers, code_index = build_layers(arch)
        self.arch = arch
        self.layers = layers
        self.code_index = int(code_index if code_index is not None else build_layers(arch)[1])
        self.params_version = 0

    @property
    def input_len(self) -> int:
        return self.arch.input_len

    @property
    def latent_dim(self) -> int:
        return self.arch.latent_dim

    @property
    def n_parameters(self) -> int:
        return sum(p.size for layer in self.layers for p in layer.params.values())

    def parameters(self) -> list[dict[str, np.ndarray]]:
        return [layer.params for layer in self.layers]

    def mark_updated(self) -> None:
        self.params_version += 1

    def _run(self, x: np.ndarray, training: bool, start: int, stop: int) -> tuple[np.ndarray, list[Any]]:
        caches = []
        for index in range(start, stop):
            x, cache = self.layers[index].forward(x, training)
            if not np.all(np.isfinite(x)):
                raise NumericalError(f"non-finite activations after layer {index} ({self.layers[index].kind})")
            caches.append(cache)
        return x, caches

    def forward(self, batch: np.ndarray, mode: Mode | str = Mode.EVAL) -> tuple[np.ndarray, ForwardCache]:
        mode = Mode(mode)
        batch = np.asarray(batch, dtype=float)
        if batch.ndim != 2 or batch.shape[1] != self.input_len:
            raise ShapeError(f"network expects (batch, {self.input_len}), got {batch.shape}")
        training = mode is Mode.TRAIN
        out, caches = self._run(batch, training, 0, len(self.layers))
        return out, ForwardCache(caches, self.params_version, training)

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> list[Grads]:
        """Parameter gradients per layer, given the gradient of the loss at the output."""
        if cache.params_version != self.params_version or len(cache.caches) != len(self.layers):
            raise StaleCacheError("forward cache was produced before the latest parameter update")
        grads: list[Grads] = [{} for _ in self.layers]
        grad = np.asarray(grad_out, dtype=float)
        for index in range(len(self.layers) - 1, -1, -1):
            grad, grads[index] = self.layers[index].backward(cache.caches[index], grad)
        return grads

    def reconstruct(self, spectra: np.ndarray) -> np.ndarray:
        out, _ = self.forward(self.check_width(np.atleast_2d(spectra)), Mode.EVAL)
        return out

    def encode(self, spectra: np.ndarray) -> np.ndarray:
        x = self.check_width(np.atleast_2d(spectra))
        code, _ = self._run(x, False, 0, self.code_index + 1)
        return code

    def decode(self, codes: np.ndarray) -> np.ndarray:
        codes = np.atleast_2d(np.asarray(codes, dtype=float))
        if codes.shape[1] != self.latent_dim:
            raise ShapeError(f"expected codes of length {self.latent_dim}, got {codes.shape[1]}")
        out, _ = self._run(codes, False, self.code_index + 1, len(self.layers))
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "format_version": FORMAT_VERSION,
            "arch": self.arch.model_dump(mode="json"),
            "code_index": self.code_index,
            "layers": [
                {
                    **layer.describe(),
                    "params": {name: _array_dict(a) for name, a in layer.params.items()},
                    "buffers": {name: _array_dict(a) for name, a in layer.buffers.items()},
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Network":
        try:
            arch = NetworkArch.model_validate(data["arch"])
            layers, code_index = build_layers(arch)
            stored = data["layers"]
            if len(stored) != len(layers) or int(data["code_index"]) != code_index:
                raise ParseError(f"layer list does not match a {arch.kind.value} architecture")
            for layer, entry in zip(layers, stored, strict=True):
                if entry["type"] != layer.kind:
                    raise ParseError(f"expected a {layer.kind} layer, found {entry['type']}")
                for group, target in (("params", layer.params), ("buffers", layer.buffers)):
                    for name, current in target.items():
                        array = _array_from(entry[group][name])
                        if array.shape != current.shape:
                            raise ParseError(f"{layer.kind}.{name}: shape {array.shape}, expected {current.shape}")
                        target[name] = array
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ParseError):
                raise
            raise ParseError(f"malformed network: {e}") from e
        return cls(arch, layers, code_index)


def _array_dict(a: np.ndarray) -> dict[str, Any]:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _array_from(entry: dict[str, Any]) -> np.ndarray:
    return np.array(entry["data"], dtype=float).reshape(entry["shape"])


def init_network(arch: NetworkArch, seed: int) -> Network:
    """He-uniform weights, zero biases, unit batch-norm scale; deterministic in ``seed``."""
    layers, code_index = build_layers(arch)
    rng = np.random.default_rng(seed)
    for layer in layers:
        layer.init_params(rng)
    network = Network(arch, layers, code_index)
    logger.debug("Initialized %s with %d parameters", arch.kind.value, network.n_parameters)
    return network


def forward(network: Network, batch: np.ndarray, mode: Mode | str = Mode.EVAL) -> tuple[np.ndarray, ForwardCache]:
    return network.forward(batch, mode)


def backward(network: Network, cache: ForwardCache, output_gradient: np.ndarray) -> list[Grads]:
    return network.backward(cache, output_gradient)


def reconstruct(network: Network, spectra: np.ndarray) -> np.ndarray:
    return network.reconstruct(spectra)


