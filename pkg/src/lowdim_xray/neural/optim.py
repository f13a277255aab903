"""Adam with bias correction."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from .layers import Grads
from .network import Network


@dataclass
class AdamState:
    """First and second moment estimates per layer parameter, plus the step counter."""

    m: list[Grads] = field(default_factory=list)
    v: list[Grads] = field(default_factory=list)
    step: int = 0

    @classmethod
    def zeros_like(cls, network: Network) -> "AdamState":
        return cls(
            m=[{name: np.zeros_like(p) for name, p in params.items()} for params in network.parameters()],
            v=[{name: np.zeros_like(p) for name, p in params.items()} for params in network.parameters()],
        )


def adam_step(
    network: Network,
    grads: list[Grads],
    state: AdamState,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> tuple[Network, AdamState]:
    """Update ``network`` in place and return it with the advanced state."""
    params = network.parameters()
    if len(grads) != len(params):
        raise ShapeError(f"got gradients for {len(grads)} layers, network has {len(params)}")
    if not state.m:
        fresh = AdamState.zeros_like(network)
        state.m, state.v = fresh.m, fresh.v

    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for index, (layer_params, layer_grads) in enumerate(zip(params, grads, strict=True)):
        for name, p in layer_params.items():
            g = layer_grads.get(name)
            if g is None or g.shape != p.shape:
                got = None if g is None else g.shape
                raise ShapeError(f"layer {index} {name}: gradient shape {got}, parameter shape {p.shape}")
            m = state.m[index][name] = beta1 * state.m[index][name] + (1.0 - beta1) * g
            v = state.v[index][name] = beta2 * state.v[index][name] + (1.0 - beta2) * g * g
            step = learning_rate * (m / correction1) / (np.sqrt(v / correction2) + epsilon)
            # parameters stay C-ordered, like weights read back from a network file
            layer_params[name] = np.ascontiguousarray(p - step)
    network.mark_updated()
    return network, state
