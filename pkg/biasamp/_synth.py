from __future__ import annotations

from typing import Literal

import numpy as np

from ._config import BiasConfig, SynthConfig
from ._dataset import GROUP_B, ExampleSet
from ._random import rng_for
from ._transforms import _draw_groups

__all__ = ("synth_generate",)


def _generate_split(
    cfg: SynthConfig,
    bias: BiasConfig,
    seed: int,
    split: Literal["train", "test"],
    n: int,
) -> ExampleSet:
    rng = rng_for("synth_generate", seed, split)
    class_labels = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    groups = _draw_groups(class_labels, bias, seed, "synthetic", split)

    sigma = np.full(cfg.dimension, cfg.noise_sigma, dtype=np.float64)
    if cfg.group_noise_sigma is not None:
        sigma[1] = cfg.group_noise_sigma
    features = rng.standard_normal((n, cfg.dimension)) * sigma

    s_class, s_group = cfg.effective_margins
    group_sign = np.where(groups == GROUP_B, -1.0, 1.0)
    features[:, 0] += s_class * class_labels
    features[:, 1] += s_group * group_sign

    return ExampleSet(
        features=features,
        class_labels=class_labels,
        group_labels=groups,
        kind="synthetic",
    )


def synth_generate(
    cfg: SynthConfig,
    bias: BiasConfig,
    seed: int,
) -> tuple[ExampleSet, ExampleSet]:
    """
    Generate a synthetic train/test pair with a tunable class-group bias.

    Classes are drawn uniformly from {-1, +1} and groups from the class with
    `bias` (the test split uses `bias.for_test()`). Each feature vector is

        s_class * t * e1 + s_group * g * e2 + noise

    where `g` is +1 for group a and -1 for group b, and the noise is
    Gaussian with standard deviation `noise_sigma` (`group_noise_sigma` on
    the second axis when set).

    Parameters
    ----------
    cfg
        Generator settings.
    bias
        Group-assignment bias.
    seed
        The same seed always yields byte-identical datasets.

    Returns
    -------
    tuple[ExampleSet, ExampleSet]
        The train and test splits, with `(n, dimension)` features.
    """
    train = _generate_split(cfg, bias, seed, "train", cfg.train_size)
    test = _generate_split(cfg, bias.for_test(), seed, "test", cfg.test_size)
    return train, test
