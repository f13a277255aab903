"""A small numpy neural-network engine for the autoencoders."""

from .network import ArchKind, ForwardCache, Mode, Network, NetworkArch, backward, forward, init_network, reconstruct
from .optim import AdamState, adam_step
from .training import TrainConfig, TrainHistory, mse, train_denoising

__all__ = [
    "AdamState",
    "ArchKind",
    "ForwardCache",
    "Mode",
    "Network",
    "NetworkArch",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "backward",
    "forward",
    "init_network",
    "mse",
    "reconstruct",
    "train_denoising",
]
