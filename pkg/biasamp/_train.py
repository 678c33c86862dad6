from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Literal, Optional, Sequence, Union, overload

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ._augment import augment_batch
from ._config import ArchConfig, TrainConfig
from ._dataset import GROUP_A, GROUP_B, GROUP_NAMES, ExampleSet, NormalizationStats
from ._errors import ShapeError, TrainingDivergedError
from ._logging import logger
from ._model import ModelState, forward, init_model, loss_and_grad, sgd_step
from ._random import rng_for
from ._schedule import effective_epochs, lr_at

__all__ = (
    "PredictionRecord",
    "PredictionTable",
    "TrainResult",
    "load_predictions",
    "predict",
    "train",
)


class PredictionRecord(BaseModel):
    """
    A model's prediction for one test example.

    Parameters
    ----------
    true_class
        The example's class, -1 or +1.
    predicted_class
        The predicted class, -1 or +1.
    confidence
        Confidence in the predicted class. For a model's own predictions this
        is `max(p, 1 - p)` and so lies in [0.5, 1].
    group
        The example's group name (`"a"` or `"b"` for datasets built here).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    true_class: Literal[-1, 1]
    predicted_class: Literal[-1, 1]
    confidence: float = Field(ge=0.0, le=1.0, allow_inf_nan=False)
    group: str

    @property
    def correct(self) -> bool:
        return self.true_class == self.predicted_class


@dataclass(frozen=True, eq=False)
class PredictionTable(Sequence[PredictionRecord]):
    """
    Column-oriented prediction records.

    Behaves as a read-only sequence of [](`~biasamp.PredictionRecord`)s and
    is what the metric functions work on.
    """

    true_class: np.ndarray
    predicted_class: np.ndarray
    confidence: np.ndarray
    group: np.ndarray

    def __post_init__(self):
        n = self.true_class.shape[0]
        for name in ("true_class", "predicted_class", "confidence", "group"):
            if getattr(self, name).shape != (n,):
                raise ShapeError(f"column '{name}' must have shape ({n},)")
        for name in ("true_class", "predicted_class"):
            if not np.all(np.isin(getattr(self, name), (-1, 1))):
                raise ValueError(f"{name} values must be -1 or +1")
        conf = np.asarray(self.confidence, dtype=np.float64)
        if not np.all(np.isfinite(conf) & (conf >= 0.0) & (conf <= 1.0)):
            raise ValueError("confidence values must lie in [0, 1]")
        object.__setattr__(self, "true_class", self.true_class.astype(np.int8))
        object.__setattr__(
            self, "predicted_class", self.predicted_class.astype(np.int8)
        )
        object.__setattr__(self, "confidence", conf)
        object.__setattr__(self, "group", self.group.astype(str))

    @classmethod
    def from_records(cls, records: Sequence[PredictionRecord]) -> "PredictionTable":
        if isinstance(records, PredictionTable):
            return records
        return cls(
            true_class=np.array([r.true_class for r in records], dtype=np.int8),
            predicted_class=np.array(
                [r.predicted_class for r in records], dtype=np.int8
            ),
            confidence=np.array([r.confidence for r in records], dtype=np.float64),
            group=np.array([r.group for r in records], dtype=str),
        )

    @property
    def correct(self) -> np.ndarray:
        return self.true_class == self.predicted_class

    def __len__(self) -> int:
        return self.true_class.shape[0]

    @overload
    def __getitem__(self, i: int) -> PredictionRecord: ...

    @overload
    def __getitem__(self, i: slice) -> "PredictionTable": ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return PredictionTable(
                true_class=self.true_class[i],
                predicted_class=self.predicted_class[i],
                confidence=self.confidence[i],
                group=self.group[i],
            )
        return PredictionRecord(
            true_class=int(self.true_class[i]),  # type: ignore[arg-type]
            predicted_class=int(self.predicted_class[i]),  # type: ignore[arg-type]
            confidence=float(self.confidence[i]),
            group=str(self.group[i]),
        )

    def __iter__(self) -> Iterator[PredictionRecord]:
        for i in range(len(self)):
            yield self[i]

    def write_jsonl(self, path: Union[str, Path]) -> None:
        """
        Write one JSON object per record, readable by
        [](`~biasamp.load_predictions`) and the `measure` command.
        """
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for rec in self:
                f.write(rec.model_dump_json() + "\n")


def load_predictions(path: Union[str, Path]) -> PredictionTable:
    """
    Read a JSONL file of prediction records.

    Each nonblank line must be an object with the fields `true_class`,
    `predicted_class`, `confidence` and `group`.

    Raises
    ------
    ValueError
        If a line is malformed; the message cites its 1-based line number.
    """
    records: list[PredictionRecord] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(PredictionRecord.model_validate_json(line))
            except ValidationError as e:
                problems = "; ".join(
                    f"{'.'.join(str(p) for p in err['loc']) or 'record'}: {err['msg']}"
                    for err in e.errors()
                )
                raise ValueError(f"line {lineno}: {problems}") from None
    return PredictionTable.from_records(records)


SnapshotHook = Callable[[int, ModelState, float], Any]


@dataclass
class TrainResult:
    """
    The outcome of [](`~biasamp.train`).

    Parameters
    ----------
    state
        The final model.
    snapshots
        Whatever the snapshot hook returned after each epoch, in order.
    learning_rates
        The learning rate used in each epoch.
    """

    state: ModelState
    snapshots: list[Any] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)


def train(
    arch: ArchConfig,
    cfg: TrainConfig,
    dataset: ExampleSet,
    seed: int,
    snapshot_hook: Optional[SnapshotHook] = None,
) -> TrainResult:
    """
    Train a binary classifier with mini-batch Nesterov SGD.

    Every epoch visits the training set in a fresh random order (augmenting
    image batches when `cfg.augmentation` is on), with the learning rate of
    [](`~biasamp.lr_at`). After each epoch `snapshot_hook(epoch, state, lr)`
    is called and its return value collected.

    Parameters
    ----------
    arch
        Architecture. `input_dimension` is taken from the data when unset.
    cfg
        Training recipe; `epoch_scaling` stretches the epoch count.
    dataset
        A nonempty, already normalized training set.
    seed
        Seeds initialization, shuffling and augmentation. The trajectory is a
        pure function of `(arch, cfg, dataset, seed)`.
    snapshot_hook
        Optional per-epoch callback.

    Raises
    ------
    TrainingDivergedError
        If the loss or a gradient becomes non-finite.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("Cannot train on an empty dataset.")
    if arch.input_dimension is None:
        arch = arch.model_copy(update={"input_dimension": dataset.input_dimension})
    elif arch.input_dimension != dataset.input_dimension:
        raise ShapeError(
            f"arch.input_dimension is {arch.input_dimension} but the data has "
            f"{dataset.input_dimension} features"
        )

    state = init_model(arch, seed)
    result = TrainResult(state=state)
    augmenting = cfg.augmentation and dataset.features.ndim == 4

    for epoch in range(1, effective_epochs(cfg) + 1):
        lr = lr_at(cfg, epoch)
        rng = rng_for("train_epoch", seed, epoch)
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x = dataset.features[idx]
            if augmenting:
                x = augment_batch(x, dataset.kind, rng)
            loss, grads = loss_and_grad(
                state, x, dataset.class_labels[idx], cfg.weight_decay
            )
            if not math.isfinite(loss):
                raise TrainingDivergedError("non-finite training loss", epoch)
            state = sgd_step(state, grads, lr, momentum=cfg.momentum)
            losses.append(loss)

        state = state.with_epoch(epoch)
        logger.debug(f"epoch {epoch}: lr={lr:g}, mean batch loss={np.mean(losses):.6f}")
        result.learning_rates.append(lr)
        if snapshot_hook is not None:
            result.snapshots.append(snapshot_hook(epoch, state, lr))

    result.state = state
    return result


def predict(
    model: ModelState,
    examples: ExampleSet,
    normalization: Optional[NormalizationStats] = None,
    *,
    batch_size: int = 4096,
) -> PredictionTable:
    """
    Predict every example of a (test) set; no augmentation is applied.

    The predicted class is +1 when the probability of +1 is at least 0.5
    (so an exact tie predicts +1) and the confidence is `max(p, 1 - p)`.

    Parameters
    ----------
    model
        A trained model.
    examples
        The examples to predict.
    normalization
        Statistics to normalize `examples` with first, if they are not
        normalized already.
    batch_size
        Rows per forward pass; does not affect the result.
    """
    features = examples.features
    if normalization is not None:
        features = normalization.apply(features)

    n = len(examples)
    probs = np.empty(n, dtype=np.float64)
    for start in range(0, n, batch_size):
        probs[start : start + batch_size] = forward(
            model, features[start : start + batch_size]
        )

    return PredictionTable(
        true_class=examples.class_labels,
        predicted_class=np.where(probs >= 0.5, 1, -1),
        confidence=np.maximum(probs, 1.0 - probs),
        group=np.array([GROUP_NAMES[GROUP_A], GROUP_NAMES[GROUP_B]])[examples.group_labels],
    )
