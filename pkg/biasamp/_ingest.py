from __future__ import annotations

import gzip
import struct
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np

from ._container import read_container, write_container
from ._dataset import ExampleSet, RawDataset, Split
from ._errors import ConfigurationError, FormatError

__all__ = (
    "ingest",
    "ingest_many",
    "load_examples",
    "load_raw",
    "save_examples",
    "save_raw",
)

IngestFormat = Literal["idx", "cifar10", "cifar100"]

IDX_LABEL_MAGIC = 0x00000801
IDX_IMAGE_MAGIC = 0x00000803

CIFAR_PIXELS = 3 * 32 * 32
CIFAR_CLASSES = {"cifar10": 10, "cifar100": 100}
# Label bytes per record; CIFAR-100 stores (coarse, fine) and we use the fine label
CIFAR_LABEL_BYTES = {"cifar10": 1, "cifar100": 2}

PathLike = Union[str, Path]


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No such dataset file: '{path}'")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _read_idx(path: PathLike, magic: int, ndim: int) -> np.ndarray:
    # IDX files (big endian):
    # [offset] [type]          [description]
    # 0000     32 bit integer  magic: 0x0000 08 <ndim> (0x08 = unsigned byte)
    # 0004     32 bit integer  size of dimension 0 (item count)
    # ....     32 bit integer  size of each further dimension
    # ....     unsigned byte   data, row-major
    data = _read_bytes(path)
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise FormatError(f"'{path}' is too short for an IDX header", len(data))

    (found,) = struct.unpack_from(">I", data, 0)
    if found != magic:
        raise FormatError(
            f"magic number mismatch in '{path}': expected 0x{magic:08x}, found 0x{found:08x}",
            0,
        )
    dims = struct.unpack_from(f">{ndim}I", data, 4)

    expected = int(np.prod(dims, dtype=np.int64))
    body = len(data) - header_len
    if body != expected:
        what = "truncated" if body < expected else "longer than its header declares"
        raise FormatError(
            f"'{path}' is {what}: header declares {expected} data bytes, found {body}",
            header_len + min(body, expected),
        )
    return np.frombuffer(data, dtype=np.uint8, offset=header_len).reshape(dims).copy()


def _idx_labels_path(images_path: PathLike) -> Path:
    p = Path(images_path)
    name = p.name.replace("images-idx3", "labels-idx1")
    if name == p.name:
        raise ConfigurationError(
            f"Cannot derive a labels file from '{p}'; pass `labels_path` explicitly."
        )
    return p.with_name(name)


def _read_cifar(path: PathLike, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    data = _read_bytes(path)
    label_bytes = CIFAR_LABEL_BYTES[fmt]
    rec = label_bytes + CIFAR_PIXELS
    if len(data) == 0:
        raise FormatError(f"'{path}' holds no records", 0)
    if len(data) % rec != 0:
        raise FormatError(
            f"'{path}' ends with an incomplete {rec}-byte record",
            (len(data) // rec) * rec,
        )

    records = np.frombuffer(data, dtype=np.uint8).reshape(-1, rec)
    labels = records[:, label_bytes - 1].astype(np.int64)
    bad = np.flatnonzero(labels >= CIFAR_CLASSES[fmt])
    if bad.size:
        raise FormatError(
            f"label {labels[bad[0]]} out of range for {fmt} in '{path}'",
            int(bad[0]) * rec + label_bytes - 1,
        )
    images = records[:, label_bytes:].reshape(-1, 3, 32, 32).copy()
    return images, labels


def ingest(
    path: PathLike,
    format: IngestFormat,  # noqa: A002
    *,
    labels_path: Optional[PathLike] = None,
    split: Split = "train",
) -> RawDataset:
    """
    Decode an image dataset file.

    Parameters
    ----------
    path
        The file to read. For the `"idx"` format this is the images file
        (e.g. `train-images-idx3-ubyte`, optionally gzipped).
    format
        `"idx"` (MNIST / Fashion-MNIST), `"cifar10"` or `"cifar100"` binary.
    labels_path
        IDX only: the labels file. Derived from `path` when omitted.
    split
        Which split the file holds.

    Returns
    -------
    RawDataset
        Decoded uint8 images `(n, channels, height, width)` and class ids.

    Raises
    ------
    FormatError
        If a magic number, header count or record size does not match. No
        partial dataset is returned.
    """
    if format == "idx":
        images = _read_idx(path, IDX_IMAGE_MAGIC, 3)
        lpath = labels_path if labels_path is not None else _idx_labels_path(path)
        labels = _read_idx(lpath, IDX_LABEL_MAGIC, 1).astype(np.int64)
        if labels.shape[0] != images.shape[0]:
            raise FormatError(
                f"'{lpath}' declares {labels.shape[0]} labels but the images file "
                f"declares {images.shape[0]} images",
                4,
            )
        num_classes = int(labels.max()) + 1 if labels.size else 0
        return RawDataset(
            images=images[:, None, :, :],
            labels=labels,
            num_classes=num_classes,
            split=split,
            kind="fashion_mnist",
        )

    if format in CIFAR_CLASSES:
        images, labels = _read_cifar(path, format)
        return RawDataset(
            images=images,
            labels=labels,
            num_classes=CIFAR_CLASSES[format],
            split=split,
            kind="cifar",
        )

    raise ConfigurationError(f"Unknown dataset format: '{format}'")


def ingest_many(
    paths: Sequence[PathLike],
    format: IngestFormat,  # noqa: A002
    *,
    split: Split = "train",
) -> RawDataset:
    """
    Decode and concatenate several files of one format (e.g. the five
    CIFAR-10 training batches). For `"idx"`, `paths` is `[images, labels]`.
    """
    if format == "idx":
        if len(paths) != 2:
            raise ConfigurationError("idx input must be [images_path, labels_path]")
        return ingest(paths[0], "idx", labels_path=paths[1], split=split)

    parts = [ingest(p, format, split=split) for p in paths]
    if not parts:
        raise ConfigurationError("Must supply at least one dataset file.")
    return RawDataset(
        images=np.concatenate([p.images for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        num_classes=parts[0].num_classes,
        split=split,
        kind=parts[0].kind,
    )


def save_raw(raw: RawDataset, path: PathLike) -> None:
    """
    Write a [](`~biasamp.types.RawDataset`) to the dataset cache format.
    """
    write_container(
        path,
        "raw-dataset",
        [raw.images, raw.labels],
        {"num_classes": raw.num_classes, "split": raw.split, "dataset_kind": raw.kind},
    )


def load_raw(path: PathLike) -> RawDataset:
    meta, (images, labels) = read_container(path, "raw-dataset")
    return RawDataset(
        images=images,
        labels=labels,
        num_classes=meta["num_classes"],
        split=meta["split"],
        kind=meta["dataset_kind"],
    )


def save_examples(examples: ExampleSet, path: PathLike) -> None:
    """
    Write an [](`~biasamp.types.ExampleSet`) to the dataset cache format.
    """
    write_container(
        path,
        "example-set",
        [examples.features, examples.class_labels, examples.group_labels],
        {"dataset_kind": examples.kind, "notes": list(examples.notes)},
    )


def load_examples(path: PathLike) -> ExampleSet:
    meta, (features, class_labels, group_labels) = read_container(path, "example-set")
    return ExampleSet(
        features=features,
        class_labels=class_labels,
        group_labels=group_labels,
        kind=meta["dataset_kind"],
        notes=tuple(meta["notes"]),
    )
