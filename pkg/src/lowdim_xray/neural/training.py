"""Denoising training loop: noisy spectra in, clean spectra as targets."""

import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import NumericalError, ShapeError, TrainingDivergenceError
from .network import Mode, Network
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=300, ge=1)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=0, ge=0)
    log_every: int = Field(default=10, ge=1)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, list[float | None]]:
        # JSON has no NaN; epochs without validation data are written as null
        return {
            "train_loss": self.train_loss,
            "val_loss": [None if np.isnan(v) else v for v in self.val_loss],
        }


def mse(output: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient with respect to ``output``."""
    diff = output - target
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def _check_pair(name: str, pair: tuple[np.ndarray, np.ndarray], width: int) -> tuple[np.ndarray, np.ndarray]:
    noisy, clean = (np.asarray(a, dtype=float) for a in pair)
    if noisy.shape != clean.shape or noisy.ndim != 2 or noisy.shape[1] != width:
        raise ShapeError(f"{name}: noisy {noisy.shape} and clean {clean.shape} must both be (rows, {width})")
    return noisy, clean


def train_denoising(
    network: Network,
    train: tuple[np.ndarray, np.ndarray],
    val: tuple[np.ndarray, np.ndarray] | None,
    config: TrainConfig,
) -> tuple[Network, TrainHistory]:
    """Minimize MSE(network(noisy), clean) with Adam over shuffled mini-batches.

    Epoch ``e`` shuffles with a generator seeded by ``(config.seed, e)``; the
    last partial batch is kept. The final epoch's parameters are returned.
    Validation loss is measured in eval mode.
    """
    noisy, clean = _check_pair("train", train, network.input_len)
    if noisy.shape[0] == 0:
        raise ShapeError("no training rows")
    val_pair = _check_pair("val", val, network.input_len) if val is not None else None

    state = AdamState.zeros_like(network)
    history = TrainHistory()
    n_rows = noisy.shape[0]
    for epoch in range(config.epochs):
        order = np.random.default_rng([config.seed, epoch]).permutation(n_rows)
        total = 0.0
        for batch_index, start in enumerate(range(0, n_rows, config.batch_size)):
            rows = order[start : start + config.batch_size]
            try:
                output, cache = network.forward(noisy[rows], Mode.TRAIN)
            except NumericalError as e:
                raise TrainingDivergenceError(
                    f"training diverged at epoch {epoch}, batch {batch_index}: {e}", epoch=epoch, batch=batch_index
                ) from e
            loss, grad = mse(output, clean[rows])
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {batch_index}", epoch=epoch, batch=batch_index
                )
            grads = network.backward(cache, grad)
            adam_step(network, grads, state, config.learning_rate, config.beta1, config.beta2, config.epsilon)
            total += loss * rows.size

        history.train_loss.append(total / n_rows)
        if val_pair is not None:
            history.val_loss.append(mse(network.reconstruct(val_pair[0]), val_pair[1])[0])
        else:
            history.val_loss.append(float("nan"))
        if (epoch + 1) % config.log_every == 0 or epoch + 1 == config.epochs:
            logger.info(
                "%s epoch %d/%d: train %.6g, val %.6g",
                network.arch.kind.value,
                epoch + 1,
                config.epochs,
                history.train_loss[-1],
                history.val_loss[-1],
            )
    return network, history
