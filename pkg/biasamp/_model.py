from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np
from scipy.special import expit

from ._config import ArchConfig
from ._container import read_container, write_container
from ._errors import ShapeError, TrainingDivergedError
from ._random import rng_for
from ._utils import require_finite

__all__ = (
    "Gradients",
    "ModelState",
    "forward",
    "init_model",
    "load_checkpoint",
    "loss_and_grad",
    "parameter_count",
    "save_checkpoint",
    "sgd_step",
)


@dataclass(frozen=True, eq=False)
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(g)) for g in (*self.weights, *self.biases))


@dataclass(frozen=True, eq=False)
class ModelState:
    """
    Parameters and Nesterov velocities of a linear or MLP binary classifier.

    Layer `l` maps `h @ weights[l] + biases[l]`; hidden layers apply a ReLU
    and the last layer produces a single logit. Velocities mirror the
    parameter shapes.

    Parameters
    ----------
    arch
        The architecture (with `input_dimension` set).
    weights
        Weight matrices of shape `(fan_in, fan_out)`.
    biases
        Bias vectors of shape `(fan_out,)`.
    velocity_weights, velocity_biases
        Momentum buffers.
    epoch
        Number of completed training epochs.
    """

    arch: ArchConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    velocity_weights: list[np.ndarray] = field(default_factory=list)
    velocity_biases: list[np.ndarray] = field(default_factory=list)
    epoch: int = 0

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ShapeError("weights and biases must have one entry per layer")
        if not self.velocity_weights:
            object.__setattr__(
                self, "velocity_weights", [np.zeros_like(w) for w in self.weights]
            )
        if not self.velocity_biases:
            object.__setattr__(
                self, "velocity_biases", [np.zeros_like(b) for b in self.biases]
            )
        for p, v in zip(
            (*self.weights, *self.biases),
            (*self.velocity_weights, *self.velocity_biases),
        ):
            if p.shape != v.shape:
                raise ShapeError(
                    f"velocity shape {v.shape} does not mirror parameter shape {p.shape}"
                )

    @property
    def input_dimension(self) -> int:
        return self.weights[0].shape[0]

    def parameters(self) -> list[np.ndarray]:
        return [a for wb in zip(self.weights, self.biases) for a in wb]

    def with_epoch(self, epoch: int) -> "ModelState":
        return replace(self, epoch=epoch)


def _layer_sizes(arch: ArchConfig) -> list[int]:
    if arch.input_dimension is None:
        raise ValueError("arch.input_dimension must be set to build a model")
    return [arch.input_dimension, *([arch.width] * arch.hidden_depth), 1]


def parameter_count(arch: ArchConfig) -> int:
    """
    Number of trainable parameters (weights and biases) of an architecture.
    """
    sizes = _layer_sizes(arch)
    return sum(a * b + b for a, b in zip(sizes, sizes[1:]))


def init_model(arch: ArchConfig, seed: int) -> ModelState:
    """
    Initialize a model.

    Weights are drawn from `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))` (He
    uniform); biases and velocities start at zero.

    Parameters
    ----------
    arch
        Architecture with `input_dimension` set.
    seed
        The same seed always yields identical parameters.
    """
    sizes = _layer_sizes(arch)
    rng = rng_for("init_model", seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return ModelState(arch=arch, weights=weights, biases=biases)


def _flatten(model: ModelState, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    x = batch.reshape(batch.shape[0], int(np.prod(batch.shape[1:])))
    if x.shape[1] != model.input_dimension:
        raise ShapeError(
            f"model expects {model.input_dimension} input features, got {x.shape[1]}"
        )
    require_finite(x, "batch features")
    return x


def _forward_pass(
    model: ModelState, x: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    # Returns (layer inputs, hidden pre-activations, logits)
    inputs = [x]
    pre = []
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i == last:
            return inputs, pre, z[:, 0]
        pre.append(z)
        h = np.maximum(z, 0.0)
        inputs.append(h)
    raise AssertionError("unreachable")


def forward(model: ModelState, batch: np.ndarray) -> np.ndarray:
    """
    Probability of class +1 for every example of a batch.

    Each output depends only on its own example, so permuting the batch
    permutes the outputs.

    Raises
    ------
    ValueError
        If the batch contains non-finite features.
    """
    _, _, logits = _forward_pass(model, _flatten(model, batch))
    return expit(logits)


def loss_and_grad(
    model: ModelState,
    batch: np.ndarray,
    labels: np.ndarray,
    weight_decay: float,
) -> tuple[float, Gradients]:
    """
    Mean binary cross-entropy of a batch plus the L2 penalty, and its gradient.

    The loss is `mean(log(1 + exp(z)) - y * z) + weight_decay / 2 * sum(|W|^2)`
    with logits `z` and targets `y = (t + 1) / 2`; biases are not penalized,
    so the decay adds `weight_decay * W` to each weight gradient only.

    Parameters
    ----------
    model
        The current model.
    batch
        A nonempty batch of features.
    labels
        Classes in {-1, +1}.
    weight_decay
        The L2 coefficient.
    """
    if len(batch) == 0:
        raise ValueError("Cannot compute the loss of an empty batch.")
    x = _flatten(model, batch)
    n = x.shape[0]
    y = (np.asarray(labels, dtype=np.float64) + 1.0) / 2.0

    inputs, pre, z = _forward_pass(model, x)
    bce = float(np.mean(np.logaddexp(0.0, z) - y * z))
    penalty = 0.5 * weight_decay * sum(float(np.sum(w * w)) for w in model.weights)

    grad_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    dz = ((expit(z) - y) / n)[:, None]
    for i in reversed(range(len(model.weights))):
        grad_w[i] = inputs[i].T @ dz + weight_decay * model.weights[i]
        grad_b[i] = dz.sum(axis=0)
        if i > 0:
            dz = (dz @ model.weights[i].T) * (pre[i - 1] > 0)

    return bce + penalty, Gradients(weights=grad_w, biases=grad_b)


def sgd_step(
    state: ModelState,
    grads: Gradients,
    lr: float,
    *,
    momentum: float = 0.9,
) -> ModelState:
    """
    One Nesterov momentum step.

    For every parameter `w` with velocity `v` and gradient `g`:

        v <- momentum * v - lr * g
        w <- w + momentum * v - lr * g

    Raises
    ------
    TrainingDivergedError
        If any gradient is non-finite.
    """
    if not grads.is_finite():
        raise TrainingDivergedError("non-finite gradient", state.epoch + 1)

    def step(ps, vs, gs):
        new_p, new_v = [], []
        for p, v, g in zip(ps, vs, gs):
            if p.shape != g.shape:
                raise ShapeError(
                    f"gradient shape {g.shape} does not match parameter shape {p.shape}"
                )
            v = momentum * v - lr * g
            new_v.append(v)
            new_p.append(p + momentum * v - lr * g)
        return new_p, new_v

    weights, velocity_weights = step(state.weights, state.velocity_weights, grads.weights)
    biases, velocity_biases = step(state.biases, state.velocity_biases, grads.biases)
    return replace(
        state,
        weights=weights,
        biases=biases,
        velocity_weights=velocity_weights,
        velocity_biases=velocity_biases,
    )


def save_checkpoint(state: ModelState, path: Union[str, Path]) -> None:
    """
    Write a model (architecture, parameters, velocities and epoch) to the
    versioned binary container; [](`~biasamp.load_checkpoint`) restores it
    bit for bit.
    """
    arrays = [
        *state.weights,
        *state.biases,
        *state.velocity_weights,
        *state.velocity_biases,
    ]
    meta = {
        "arch": state.arch.model_dump(mode="json"),
        "epoch": state.epoch,
        "layers": len(state.weights),
    }
    write_container(path, "model-checkpoint", arrays, meta)


def load_checkpoint(path: Union[str, Path]) -> ModelState:
    meta, arrays = read_container(path, "model-checkpoint")
    n = meta["layers"]
    return ModelState(
        arch=ArchConfig.model_validate(meta["arch"]),
        weights=arrays[0:n],
        biases=arrays[n : 2 * n],
        velocity_weights=arrays[2 * n : 3 * n],
        velocity_biases=arrays[3 * n : 4 * n],
        epoch=meta["epoch"],
    )
