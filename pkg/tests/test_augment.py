import numpy as np
import pytest
from biasamp import augment
from biasamp._augment import augment_batch, flip_horizontal


def test_flip_is_an_involution():
    img = np.arange(2 * 3 * 4).reshape(2, 3, 4)
    np.testing.assert_array_equal(flip_horizontal(flip_horizontal(img)), img)
    np.testing.assert_array_equal(flip_horizontal(img)[:, :, 0], img[:, :, -1])


def test_cifar_augmentation_keeps_shape():
    rng = np.random.default_rng(0)
    img = rng.standard_normal((3, 32, 32))
    out = augment(img, "cifar", seed=1)
    assert out.shape == (3, 32, 32)
    np.testing.assert_array_equal(out, augment(img, "cifar", seed=1))


def test_cifar_crop_is_a_shifted_window():
    img = np.arange(1, 3 * 8 * 8 + 1, dtype=np.float64).reshape(3, 8, 8)
    for seed in range(20):
        out = augment(img, "cifar", seed=seed)
        # Every nonzero pixel comes from the original image
        assert set(out[out != 0]) <= set(img.ravel())


def test_fashion_mnist_only_flips():
    img = np.random.default_rng(2).standard_normal((1, 28, 28))
    for seed in range(10):
        out = augment(img, "fashion_mnist", seed=seed)
        assert np.array_equal(out, img) or np.array_equal(out, flip_horizontal(img))


def test_synthetic_features_are_not_augmented():
    x = np.ones((4, 7))
    assert augment_batch(x, "synthetic", np.random.default_rng(0)) is x


def test_augment_batch_rejects_flat_images():
    with pytest.raises(ValueError, match="channels"):
        augment_batch(np.ones((4, 7)), "cifar", np.random.default_rng(0))
