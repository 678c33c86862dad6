from __future__ import annotations

import hashlib
import re
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ._utils import strictly_increasing

__all__ = (
    "ArchConfig",
    "BiasConfig",
    "ExperimentConfig",
    "IngestedSource",
    "MixConfig",
    "SweepAxis",
    "SweepGrid",
    "SynthConfig",
    "SyntheticSource",
    "TrainConfig",
    "TrialConfig",
)

Convention = Literal["inversion", "mixing"]
"""
How groups are drawn from class labels: the inversion protocol inverts
positives with rate 1/2 - epsilon, the mixing protocol puts positives in group
a with rate 1/2 + epsilon.
"""

SweepAxis = Literal["epsilon", "eta", "depth", "width", "weight_decay", "train_fraction"]


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _check_epsilon(name: str, v: Optional[float]) -> Optional[float]:
    if v is not None and not (0.0 <= v <= 0.5):
        raise ValueError(f"{name} must lie in [0, 0.5], got {v}")
    return v


class BiasConfig(_Config):
    """
    How strongly group membership is tied to class membership.

    Parameters
    ----------
    epsilon
        Bias parameter in [0, 1/2]; the dataset bias has strength `2 * epsilon`.
    convention
        The group-assignment protocol, `"inversion"` or `"mixing"`.
    test_epsilon
        Bias of the test split. Defaults to `epsilon` (train and test come
        from the same distribution).
    """

    epsilon: float = 0.0
    convention: Convention = "inversion"
    test_epsilon: Optional[float] = None

    @field_validator("epsilon")
    @classmethod
    def _epsilon_range(cls, v: float) -> float:
        return _check_epsilon("epsilon", v)  # type: ignore[return-value]

    @field_validator("test_epsilon")
    @classmethod
    def _test_epsilon_range(cls, v: Optional[float]) -> Optional[float]:
        return _check_epsilon("test_epsilon", v)

    def for_test(self) -> "BiasConfig":
        """
        The bias configuration used to build the test split.
        """
        if self.test_epsilon is None:
            return self
        return self.model_copy(update={"epsilon": self.test_epsilon})


class MixConfig(_Config):
    """
    Image-mixing protocol: each example blends a class image with a group image.

    Parameters
    ----------
    eta
        Weight of the group image, in [0, 1].
    group_class_ids
        Dataset classes supplying group images for groups a and b.
    task_class_ids
        Dataset classes forming the binary task; the first is the positive class.
    """

    eta: float = Field(0.5, ge=0.0, le=1.0)
    group_class_ids: tuple[int, int] = (0, 1)
    task_class_ids: tuple[int, int] = (2, 3)

    @model_validator(mode="after")
    def _distinct_ids(self) -> "MixConfig":
        ids = [*self.group_class_ids, *self.task_class_ids]
        if len(set(ids)) != 4:
            raise ValueError(
                f"group_class_ids and task_class_ids must be four distinct ids, got {ids}"
            )
        if min(ids) < 0:
            raise ValueError(f"class ids must be non-negative, got {ids}")
        return self


class SynthConfig(_Config):
    """
    Synthetic Gaussian data with a class axis and a group axis.

    A feature vector is `s_class * t * e1 + s_group * g * e2 + noise`, where
    `t` and `g` are the class and group in {-1, +1}.

    Parameters
    ----------
    dimension
        Feature dimension (at least 2).
    class_margin
        Signal strength `s_class` on the first axis.
    group_margin
        Signal strength `s_group` on the second axis.
    noise_sigma
        Standard deviation of the isotropic Gaussian noise.
    group_noise_sigma
        Noise on the group axis only. Defaults to `noise_sigma`; set it small
        to make the group perfectly recognizable.
    eta
        Optional relative-difficulty knob in [0, 1]: the margins become
        `(1 - eta) * s_class` and `eta * s_group`, mirroring image mixing.
    train_size, test_size
        Number of examples per split.
    """

    dimension: int = Field(20, ge=2)
    class_margin: float = Field(1.0, ge=0.0, allow_inf_nan=False)
    group_margin: float = Field(3.0, ge=0.0, allow_inf_nan=False)
    noise_sigma: float = Field(1.0, ge=0.0, allow_inf_nan=False)
    group_noise_sigma: Optional[float] = Field(None, ge=0.0, allow_inf_nan=False)
    eta: Optional[float] = Field(None, ge=0.0, le=1.0)
    train_size: int = Field(5000, ge=1)
    test_size: int = Field(5000, ge=1)

    @property
    def effective_margins(self) -> tuple[float, float]:
        if self.eta is None:
            return self.class_margin, self.group_margin
        return (1.0 - self.eta) * self.class_margin, self.eta * self.group_margin


class ArchConfig(_Config):
    """
    Classifier architecture.

    Parameters
    ----------
    family
        `"linear"` (logistic regression) or `"mlp"` (ReLU hidden layers).
    depth
        Number of hidden layers. Always 0 for the linear family.
    width
        Units per hidden layer.
    input_dimension
        Flattened input size. Left unset in trial configs; training fills it
        in from the data.
    """

    family: Literal["linear", "mlp"] = "mlp"
    depth: int = Field(2, ge=0)
    width: int = Field(32, ge=1)
    input_dimension: Optional[int] = Field(None, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _linear_has_no_hidden_layers(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("family") == "linear":
            data = {**data, "depth": 0}
        return data

    @property
    def hidden_depth(self) -> int:
        return 0 if self.family == "linear" else self.depth


class TrainConfig(_Config):
    """
    Optimization recipe: Nesterov SGD with warmup and step decay.

    Parameters
    ----------
    epochs
        Nominal number of epochs `E`.
    batch_size
        Mini-batch size.
    base_lr
        Learning rate after warmup, before any decay.
    warmup_lr, warmup_epochs
        Learning rate used for the first `warmup_epochs` epochs.
    decay_milestone_fractions
        Fractions of the (effective) epoch count after which the learning
        rate is divided by `decay_factor`.
    decay_factor
        Divisor applied at each milestone.
    momentum
        Nesterov momentum coefficient.
    weight_decay
        L2 penalty on weights (never on biases).
    augmentation
        Random crop + horizontal flip of training images.
    epoch_scaling
        Training-set fraction `p`; when set, training runs `round(E / p)`
        epochs with the same milestone fractions. Inside a trial it defaults
        to the trial's `train_fraction`; set it to 1 to keep `E` epochs.
    """

    epochs: int = Field(30, ge=1)
    batch_size: int = Field(128, ge=1)
    base_lr: float = Field(0.1, gt=0.0)
    warmup_lr: float = Field(0.01, ge=0.0)
    warmup_epochs: int = Field(1, ge=0)
    decay_milestone_fractions: tuple[float, ...] = (0.5, 0.75)
    decay_factor: float = Field(10.0, gt=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(1e-4, ge=0.0, allow_inf_nan=False)
    augmentation: bool = False
    epoch_scaling: Optional[float] = Field(None, gt=0.0, le=1.0)

    @field_validator("decay_milestone_fractions")
    @classmethod
    def _fractions(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(not (0.0 < f < 1.0) for f in v):
            raise ValueError(
                f"decay_milestone_fractions must lie strictly inside (0, 1), got {list(v)}"
            )
        if not strictly_increasing(v):
            raise ValueError(
                f"decay_milestone_fractions must be strictly increasing, got {list(v)}"
            )
        return v


class SyntheticSource(_Config):
    kind: Literal["synthetic"] = "synthetic"
    synth: SynthConfig = SynthConfig()


class IngestedSource(_Config):
    """
    Real image data read from disk.

    For the `"idx"` format, `train` and `test` are `[images_path, labels_path]`.
    For CIFAR formats they list the binary batch files to concatenate. For
    `"cache"` they name a single dataset-cache file each.
    """

    kind: Literal["ingested"] = "ingested"
    format: Literal["idx", "cifar10", "cifar100", "cache"]
    train: list[str] = Field(min_length=1)
    test: list[str] = Field(min_length=1)

    @model_validator(mode="after")
    def _path_counts(self) -> "IngestedSource":
        if self.format == "idx":
            for name, paths in (("train", self.train), ("test", self.test)):
                if len(paths) != 2:
                    raise ValueError(
                        f"{name} must be [images_path, labels_path] for the idx format"
                    )
        if self.format == "cache":
            for name, paths in (("train", self.train), ("test", self.test)):
                if len(paths) != 1:
                    raise ValueError(f"{name} must name exactly one cache file")
        return self


DatasetSource = Union[SyntheticSource, IngestedSource]


class TrialConfig(_Config):
    """
    Everything needed to reproduce one trial.

    Parameters
    ----------
    dataset
        Where the data comes from (synthetic or ingested).
    bias
        Group-assignment bias.
    mix
        Image-mixing settings (ingested data under the mixing protocol).
    train_fraction
        Stratified subsample fraction `p` of the training split.
    arch
        Classifier architecture.
    train
        Optimization recipe.
    seed
        Trial seed; also the seed of the random class binarization.
    role_swap
        Exchange the roles of class and group (inversion protocol only).
    probe
        Also train a probe that predicts group membership and record its accuracy.
    """

    dataset: DatasetSource = Field(default_factory=SyntheticSource, discriminator="kind")
    bias: BiasConfig = BiasConfig()
    mix: Optional[MixConfig] = None
    train_fraction: float = Field(1.0, gt=0.0, le=1.0)
    arch: ArchConfig = ArchConfig()
    train: TrainConfig = TrainConfig()
    seed: int = Field(0, ge=0)
    role_swap: bool = False
    probe: bool = False

    @model_validator(mode="after")
    def _protocol_consistency(self) -> "TrialConfig":
        ingested = isinstance(self.dataset, IngestedSource)
        if ingested and self.bias.convention == "mixing" and self.mix is None:
            raise ValueError("the mixing protocol on ingested data requires `mix`")
        if self.mix is not None and self.bias.convention != "mixing":
            raise ValueError("`mix` is only valid with bias.convention = 'mixing'")
        if self.role_swap and self.bias.convention != "inversion":
            raise ValueError("role_swap is only supported for the inversion protocol")
        return self

    @property
    def train_recipe(self) -> TrainConfig:
        """
        The training recipe with epoch scaling defaulted to `train_fraction`.
        """
        if self.train.epoch_scaling is not None or self.train_fraction == 1.0:
            return self.train
        return self.train.model_copy(update={"epoch_scaling": self.train_fraction})

    def key(self) -> str:
        """
        A stable content hash identifying this trial (used for resume).
        """
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


class SweepGrid(_Config):
    """
    One-axis sweep over a base trial.

    Parameters
    ----------
    axis
        Which knob to vary.
    values
        Strictly increasing values of the knob.
    seeds
        Number of seeded trials per value.
    """

    axis: SweepAxis
    values: list[float] = Field(min_length=1)
    seeds: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _values(self) -> "SweepGrid":
        if not strictly_increasing(self.values):
            raise ValueError(f"values must be strictly increasing, got {self.values}")
        if self.axis in ("depth", "width") and any(
            v != int(v) for v in self.values
        ):
            raise ValueError(f"values of the {self.axis} axis must be integers")
        return self


class ExperimentConfig(_Config):
    """
    The top-level JSON document consumed by the command-line interface.

    Parameters
    ----------
    name
        Sweep name; results go to `<out_dir>/<name>/`.
    trial
        The base trial.
    sweep
        Optional one-axis grid applied to the base trial.
    concurrency
        Maximum number of trials to run at once.
    """

    name: str = "experiment"
    trial: TrialConfig = TrialConfig()
    sweep: Optional[SweepGrid] = None
    concurrency: int = Field(1, ge=1)

    @field_validator("name")
    @classmethod
    def _safe_name(cls, v: str) -> str:
        if not re.fullmatch(r"[A-Za-z0-9][A-Za-z0-9_.-]*", v):
            raise ValueError(
                f"name must be a plain file name (letters, digits, '_', '.', '-'), got {v!r}"
            )
        return v
