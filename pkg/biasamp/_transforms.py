from __future__ import annotations

from typing import Optional

import numpy as np

from ._config import BiasConfig, MixConfig
from ._dataset import GROUP_A, GROUP_B, ExampleSet, NormalizationStats, RawDataset
from ._errors import ConfigurationError, ShapeError
from ._logging import logger
from ._random import rng_for
from ._utils import round_half_up

__all__ = (
    "assign_groups",
    "binarize_labels",
    "build_inversion_examples",
    "build_mixed_examples",
    "compute_normalization",
    "invert_image",
    "mix_images",
    "normalize_examples",
    "relabel_to_group",
    "stratified_subsample",
    "relabel_swap_roles",
)

STD_FLOOR = 1e-8


def binarize_labels(raw: RawDataset, seed: int) -> dict[int, int]:
    """
    Randomly split the dataset's classes in half: positive (+1) or negative (-1).

    Parameters
    ----------
    raw
        The dataset whose `num_classes` classes are split.
    seed
        Seed of the split. The same seed always yields the same mapping.

    Returns
    -------
    dict[int, int]
        Map from original class id to {-1, +1}; exactly half map to +1.
    """
    k = raw.num_classes
    if k < 2 or k % 2 != 0:
        raise ConfigurationError(
            f"Binarizing labels requires an even class count, got K={k}."
        )
    perm = rng_for("binarize_labels", seed).permutation(k)
    positives = {int(c) for c in perm[: k // 2]}
    return {c: (1 if c in positives else -1) for c in range(k)}


def _draw_groups(
    class_labels: np.ndarray,
    bias: BiasConfig,
    seed: int,
    *parts: str,
) -> np.ndarray:
    eps = bias.epsilon
    if not (0.0 <= eps <= 0.5):
        raise ConfigurationError(f"epsilon must lie in [0, 0.5], got {eps}")

    rng = rng_for("assign_groups", bias.convention, seed, *parts)
    u = rng.random(class_labels.shape[0])
    positive = class_labels == 1
    if bias.convention == "inversion":
        # Positives are inverted (group b) with rate 1/2 - eps, negatives with 1/2 + eps
        inverted = u < np.where(positive, 0.5 - eps, 0.5 + eps)
        return np.where(inverted, GROUP_B, GROUP_A).astype(np.int8)
    # Mixing: positives land in group a with rate 1/2 + eps, negatives with 1/2 - eps
    in_a = u < np.where(positive, 0.5 + eps, 0.5 - eps)
    return np.where(in_a, GROUP_A, GROUP_B).astype(np.int8)


def assign_groups(examples: ExampleSet, bias: BiasConfig, seed: int) -> ExampleSet:
    """
    Draw a group for every example, independently, from its class.

    Under the inversion convention a positive example is placed in the
    inverted group (b) with probability `1/2 - epsilon` and a negative one
    with probability `1/2 + epsilon`. Under the mixing convention a positive
    example is placed in group a with probability `1/2 + epsilon` and a
    negative one with probability `1/2 - epsilon`.

    Only labels change; see [](`~biasamp.build_inversion_examples`) for the
    pixel inversion that accompanies the inversion convention.
    """
    groups = _draw_groups(examples.class_labels, bias, seed)
    return examples.with_labels(examples.class_labels, groups)


def invert_image(img: np.ndarray) -> np.ndarray:
    """
    Photographic negative of 8-bit pixels: each value `v` becomes `255 - v`.
    """
    if img.dtype == np.uint8:
        return np.subtract(np.uint8(255), img, dtype=np.uint8)
    if img.size and (img.min() < 0 or img.max() > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    return 255 - img


def mix_images(
    class_img: np.ndarray,
    group_img: np.ndarray,
    eta: float,
) -> np.ndarray:
    """
    Blend a group image into a class image: `eta * group + (1 - eta) * class`.

    The blend is computed in float64 on raw pixel values and not requantized,
    so `eta = 0` returns the class image and `eta = 1` the group image exactly.
    Works elementwise, so batches of images can be mixed at once.
    """
    if class_img.shape != group_img.shape:
        raise ShapeError(
            f"cannot mix images of shapes {class_img.shape} and {group_img.shape}"
        )
    if not (0.0 <= eta <= 1.0):
        raise ConfigurationError(f"eta must lie in [0, 1], got {eta}")
    c = np.asarray(class_img, dtype=np.float64)
    g = np.asarray(group_img, dtype=np.float64)
    return eta * g + (1.0 - eta) * c


def build_inversion_examples(
    raw: RawDataset,
    mapping: dict[int, int],
    bias: BiasConfig,
    seed: int,
) -> ExampleSet:
    """
    Binarize classes, draw groups with the inversion convention, and invert
    the pixels of every group-b (inverted) example.
    """
    lookup = np.array([mapping[c] for c in range(raw.num_classes)], dtype=np.int8)
    class_labels = lookup[raw.labels]
    inversion = bias.model_copy(update={"convention": "inversion"})
    groups = _draw_groups(class_labels, inversion, seed, raw.split)

    inverted = groups == GROUP_B
    images = raw.images.copy()
    images[inverted] = invert_image(images[inverted])

    return ExampleSet(
        features=images.astype(np.float64),
        class_labels=class_labels,
        group_labels=groups,
        kind=raw.kind,
    )


def build_mixed_examples(
    raw: RawDataset,
    mix: MixConfig,
    bias: BiasConfig,
    seed: int,
) -> ExampleSet:
    """
    Build the image-mixing task.

    Every image of the two task classes becomes one example (the first task
    class is positive). Its group is drawn with the mixing convention, and a
    group image is sampled uniformly from that group's dataset class and
    blended in with weight `eta`.
    """
    ids = [*mix.group_class_ids, *mix.task_class_ids]
    if max(ids) >= raw.num_classes:
        raise ConfigurationError(
            f"mix class ids {ids} exceed the dataset's class count {raw.num_classes}"
        )

    pos_id, neg_id = mix.task_class_ids
    task_idx = np.flatnonzero((raw.labels == pos_id) | (raw.labels == neg_id))
    class_labels = np.where(raw.labels[task_idx] == pos_id, 1, -1).astype(np.int8)
    mixing = bias.model_copy(update={"convention": "mixing"})
    groups = _draw_groups(class_labels, mixing, seed, raw.split)

    pools = {
        GROUP_A: np.flatnonzero(raw.labels == mix.group_class_ids[0]),
        GROUP_B: np.flatnonzero(raw.labels == mix.group_class_ids[1]),
    }
    for g, pool in pools.items():
        if pool.size == 0:
            raise ConfigurationError(
                f"group class {mix.group_class_ids[g]} has no images in the {raw.split} split"
            )

    rng = rng_for("mix_group_images", seed, raw.split)
    group_idx = np.empty(task_idx.shape[0], dtype=np.int64)
    for g, pool in pools.items():
        mask = groups == g
        group_idx[mask] = pool[rng.integers(0, pool.size, size=int(mask.sum()))]

    features = mix_images(raw.images[task_idx], raw.images[group_idx], mix.eta)
    return ExampleSet(
        features=features,
        class_labels=class_labels,
        group_labels=groups,
        kind=raw.kind,
    )


def stratified_subsample(
    examples: ExampleSet,
    p: float,
    seed: int,
) -> ExampleSet:
    """
    Keep a fraction `p` of every (class, group) cell.

    Each cell keeps `round_half_up(p * cell_size)` examples chosen uniformly
    without replacement; kept examples stay in their original order. A
    nonempty cell that rounds to zero is emptied and noted on the result
    (see `ExampleSet.notes`) rather than raising.
    """
    if not (0.0 < p <= 1.0):
        raise ConfigurationError(f"train_fraction must lie in (0, 1], got {p}")
    if p == 1.0:
        return examples

    kept: list[np.ndarray] = []
    notes: list[str] = []
    for t in (1, -1):
        for g in (GROUP_A, GROUP_B):
            idx = np.flatnonzero(
                (examples.class_labels == t) & (examples.group_labels == g)
            )
            k = round_half_up(p * idx.size)
            if idx.size > 0 and k == 0:
                msg = (
                    f"subsample cell (class={t:+d}, group={g}) with {idx.size} "
                    f"example(s) rounds to zero at p={p}"
                )
                logger.warning(msg)
                notes.append(msg)
            if k > 0:
                rng = rng_for("stratified_subsample", seed, t, g)
                kept.append(rng.choice(idx, size=k, replace=False))

    indices = np.sort(np.concatenate(kept)) if kept else np.zeros(0, dtype=np.int64)
    return examples.take(indices).with_notes(*notes)


def compute_normalization(raw: RawDataset) -> NormalizationStats:
    """
    Per-channel mean and population standard deviation of original pixels.

    Always computed on the untransformed training images (before inversion,
    mixing or augmentation). Standard deviations are floored at `1e-8`.
    """
    if len(raw) == 0:
        raise ValueError("Cannot compute normalization statistics of an empty split.")
    mean = raw.images.mean(axis=(0, 2, 3), dtype=np.float64)
    std = raw.images.std(axis=(0, 2, 3), dtype=np.float64)
    return NormalizationStats(mean=mean, std=np.maximum(std, STD_FLOOR))


def normalize_examples(
    examples: ExampleSet,
    stats: Optional[NormalizationStats],
) -> ExampleSet:
    if stats is None:
        return examples
    return ExampleSet(
        features=stats.apply(examples.features),
        class_labels=examples.class_labels,
        group_labels=examples.group_labels,
        kind=examples.kind,
        notes=examples.notes,
    )


def relabel_swap_roles(examples: ExampleSet) -> ExampleSet:
    """
    Exchange the roles of class and group without touching the features.

    The new class is +1 exactly for group-b (inverted) examples, and the new
    group is b exactly for originally positive examples, so applying the swap
    twice restores the original labels.
    """
    new_class = np.where(examples.group_labels == GROUP_B, 1, -1)
    new_group = np.where(examples.class_labels == 1, GROUP_B, GROUP_A)
    return examples.with_labels(new_class, new_group)


def relabel_to_group(examples: ExampleSet) -> ExampleSet:
    """
    Make group membership the prediction target (+1 for group b).
    """
    return examples.with_labels(
        np.where(examples.group_labels == GROUP_B, 1, -1),
        examples.group_labels,
    )
