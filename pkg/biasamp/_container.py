"""
Versioned binary container shared by the dataset cache and model checkpoints.

Layout (all integers big-endian):

    [offset] [type]          [description]
    0000     8 bytes         magic b"BIASAMP\\x00"
    0008     32 bit integer  container version (currently 1)
    0012     32 bit integer  header length L in bytes
    0016     L bytes         UTF-8 JSON header (sorted keys); it names the
                             container `kind` and lists each array's
                             numpy dtype string and shape, in body order
    0016+L   ...             array bodies, C order, in the listed dtypes

The body must end exactly after the last array, so truncation and trailing
garbage are both detected.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Union

import numpy as np

from ._errors import FormatError

MAGIC = b"BIASAMP\x00"
VERSION = 1
_PREAMBLE = struct.Struct(">8sII")


def write_container(
    path: Union[str, Path],
    kind: str,
    arrays: list[np.ndarray],
    meta: dict[str, Any],
) -> None:
    specs = []
    bodies = []
    for a in arrays:
        a = np.ascontiguousarray(a)
        # Pin byte order so files are identical across platforms
        dtype = a.dtype.newbyteorder("<") if a.dtype.itemsize > 1 else a.dtype
        a = a.astype(dtype, copy=False)
        specs.append({"dtype": dtype.str, "shape": list(a.shape)})
        bodies.append(a.tobytes())

    header = json.dumps(
        {"kind": kind, "arrays": specs, "meta": meta},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")

    with open(path, "wb") as f:
        f.write(_PREAMBLE.pack(MAGIC, VERSION, len(header)))
        f.write(header)
        for body in bodies:
            f.write(body)


def read_container(
    path: Union[str, Path],
    kind: str,
) -> tuple[dict[str, Any], list[np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < _PREAMBLE.size:
        raise FormatError("file is too short to hold a container preamble", len(data))
    magic, version, header_len = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad container magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}", 8)

    start = _PREAMBLE.size
    if len(data) < start + header_len:
        raise FormatError("container header is truncated", len(data))
    try:
        header = json.loads(data[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"container header is not valid JSON ({e})", start)
    if header.get("kind") != kind:
        raise FormatError(
            f"expected a '{kind}' container, found '{header.get('kind')}'", start
        )

    offset = start + header_len
    arrays: list[np.ndarray] = []
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if len(data) < offset + nbytes:
            raise FormatError("container body is truncated", len(data))
        arr = np.frombuffer(data, dtype=dtype, count=nbytes // dtype.itemsize, offset=offset)
        arrays.append(arr.reshape(shape).astype(dtype.newbyteorder("="), copy=True))
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} unexpected trailing byte(s)", offset)

    return header["meta"], arrays
