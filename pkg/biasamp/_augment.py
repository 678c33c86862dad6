from __future__ import annotations

import numpy as np

from ._dataset import DatasetKind
from ._random import rng_for

__all__ = ("augment", "augment_batch", "flip_horizontal")

# Zero padding (in pixels) before the random crop; the crop keeps the input size
PADDING: dict[DatasetKind, int] = {"cifar": 4, "fashion_mnist": 0}


def flip_horizontal(img: np.ndarray) -> np.ndarray:
    return img[..., ::-1]


def augment_batch(
    images: np.ndarray,
    kind: DatasetKind,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Random crop then horizontal flip (with probability 1/2) of a batch of
    `(n, channels, height, width)` images.

    CIFAR images are zero-padded by 4 pixels and cropped back to their size.
    Fashion-MNIST images are cropped to their own size without padding, so
    only the flip has an effect. Synthetic features are returned unchanged.
    """
    if kind == "synthetic":
        return images
    if images.ndim != 4:
        raise ValueError(f"expected (n, channels, height, width) images, got {images.shape}")

    n, _, h, w = images.shape
    pad = PADDING[kind]
    padded = np.pad(images, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dy = rng.integers(0, 2 * pad + 1, size=n)
    dx = rng.integers(0, 2 * pad + 1, size=n)
    flip = rng.random(n) < 0.5

    out = np.empty_like(images)
    for i in range(n):
        crop = padded[i, :, dy[i] : dy[i] + h, dx[i] : dx[i] + w]
        out[i] = flip_horizontal(crop) if flip[i] else crop
    return out


def augment(img: np.ndarray, kind: DatasetKind, seed: int) -> np.ndarray:
    """
    Augment one `(channels, height, width)` training image.

    Never used on the prediction path.
    """
    return augment_batch(img[None], kind, rng_for("augment", seed))[0]
