from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from ._errors import ShapeError

__all__ = (
    "GROUP_A",
    "GROUP_B",
    "GROUP_NAMES",
    "Example",
    "ExampleSet",
    "NormalizationStats",
    "RawDataset",
)

GROUP_A = 0
GROUP_B = 1
GROUP_NAMES = {GROUP_A: "a", GROUP_B: "b"}
"""
Printable group names. Under the inversion protocol group b is the inverted
group; under the mixing protocol the names follow the group images.
"""

Split = Literal["train", "test"]
DatasetKind = Literal["cifar", "fashion_mnist", "synthetic"]


def _readonly(x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class RawDataset:
    """
    Decoded images with their original (multi-class) labels.

    Parameters
    ----------
    images
        Unsigned 8-bit pixels of shape `(n, channels, height, width)`.
    labels
        Original class ids of shape `(n,)`.
    num_classes
        Class count `K` of the source dataset.
    split
        `"train"` or `"test"`.
    kind
        Which augmentation family the images belong to.
    """

    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: Split = "train"
    kind: DatasetKind = "fashion_mnist"

    def __post_init__(self):
        if self.images.dtype != np.uint8 or self.images.ndim != 4:
            raise ShapeError(
                "images must be a uint8 array of shape (n, channels, height, width), "
                f"got {self.images.dtype} with shape {self.images.shape}"
            )
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeError(
                f"expected {self.images.shape[0]} labels, got shape {self.labels.shape}"
            )
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ShapeError(f"labels must lie in [0, {self.num_classes})")
        object.__setattr__(self, "images", _readonly(self.images))
        object.__setattr__(self, "labels", _readonly(self.labels.astype(np.int64)))

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def channel_count(self) -> int:
        return self.images.shape[1]

    @property
    def height(self) -> int:
        return self.images.shape[2]

    @property
    def width(self) -> int:
        return self.images.shape[3]

    def __repr__(self) -> str:
        return (
            f"<RawDataset split='{self.split}' n={len(self)} K={self.num_classes} "
            f"shape={self.images.shape[1:]}>"
        )


@dataclass(frozen=True)
class Example:
    """
    One sample: features, a binary class in {-1, +1} and a group in {0, 1}.
    """

    features: np.ndarray
    class_label: int
    group_label: int


@dataclass(frozen=True)
class ExampleSet:
    """
    An immutable, column-oriented collection of [](`~biasamp.types.Example`)s.

    Parameters
    ----------
    features
        Real-valued features of shape `(n, ...)`; images keep their
        `(channels, height, width)` layout so they can be augmented.
    class_labels
        Binary classes in {-1, +1}, shape `(n,)`.
    group_labels
        Groups in {0, 1} ([](`~biasamp.GROUP_A`), [](`~biasamp.GROUP_B`)).
    kind
        Which augmentation family the features belong to.
    """

    features: np.ndarray
    class_labels: np.ndarray
    group_labels: np.ndarray
    kind: DatasetKind = "synthetic"
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = self.features.shape[0]
        if self.class_labels.shape != (n,) or self.group_labels.shape != (n,):
            raise ShapeError(
                f"expected {n} class and group labels, got shapes "
                f"{self.class_labels.shape} and {self.group_labels.shape}"
            )
        if not np.all(np.isin(self.class_labels, (-1, 1))):
            raise ShapeError("class labels must be -1 or +1")
        if not np.all(np.isin(self.group_labels, (GROUP_A, GROUP_B))):
            raise ShapeError("group labels must be 0 or 1")
        object.__setattr__(
            self, "features", _readonly(self.features.astype(np.float64, copy=False))
        )
        object.__setattr__(
            self, "class_labels", _readonly(self.class_labels.astype(np.int8))
        )
        object.__setattr__(
            self, "group_labels", _readonly(self.group_labels.astype(np.int8))
        )

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, i: int) -> Example:
        return Example(
            features=self.features[i],
            class_label=int(self.class_labels[i]),
            group_label=int(self.group_labels[i]),
        )

    def __iter__(self) -> Iterator[Example]:
        for i in range(len(self)):
            yield self[i]

    @property
    def feature_shape(self) -> tuple[int, ...]:
        return tuple(self.features.shape[1:])

    @property
    def input_dimension(self) -> int:
        return int(np.prod(self.feature_shape))

    def take(self, indices: np.ndarray) -> "ExampleSet":
        return ExampleSet(
            features=self.features[indices],
            class_labels=self.class_labels[indices],
            group_labels=self.group_labels[indices],
            kind=self.kind,
            notes=self.notes,
        )

    def with_labels(
        self,
        class_labels: np.ndarray,
        group_labels: np.ndarray,
    ) -> "ExampleSet":
        """
        The same features under new class and group labels.
        """
        return ExampleSet(
            features=self.features,
            class_labels=class_labels,
            group_labels=group_labels,
            kind=self.kind,
            notes=self.notes,
        )

    def with_notes(self, *notes: str) -> "ExampleSet":
        return ExampleSet(
            features=self.features,
            class_labels=self.class_labels,
            group_labels=self.group_labels,
            kind=self.kind,
            notes=(*self.notes, *notes),
        )

    def cell_counts(self) -> dict[tuple[int, int], int]:
        """
        Example counts per (class, group) cell.
        """
        return {
            (t, g): int(
                np.count_nonzero((self.class_labels == t) & (self.group_labels == g))
            )
            for t in (1, -1)
            for g in (GROUP_A, GROUP_B)
        }

    def __repr__(self) -> str:
        return (
            f"<ExampleSet kind='{self.kind}' n={len(self)} "
            f"feature_shape={self.feature_shape}>"
        )


@dataclass(frozen=True)
class NormalizationStats:
    """
    Per-channel mean and (population) standard deviation.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ShapeError("mean and std must be vectors of equal length")

    @property
    def channel_count(self) -> int:
        return self.mean.shape[0]

    def apply(self, features: np.ndarray) -> np.ndarray:
        """
        Normalize `(n, channels, height, width)` features channel by channel.
        """
        if features.ndim != 4 or features.shape[1] != self.channel_count:
            raise ShapeError(
                f"expected (n, {self.channel_count}, h, w) features, got {features.shape}"
            )
        mean = self.mean.reshape(1, -1, 1, 1)
        std = self.std.reshape(1, -1, 1, 1)
        return (features - mean) / std
