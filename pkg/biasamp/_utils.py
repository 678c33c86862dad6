from __future__ import annotations

import math
from typing import Iterable

import numpy as np


def round_half_up(x: float) -> int:
    """
    Round to the nearest integer, with ties going up (`2.5 -> 3`).

    Python's `round()` rounds ties to even, which would shift milestone and
    subsample counts by one for exact halves.
    """
    return int(math.floor(x + 0.5))


def require_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        n_bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise ValueError(f"{what} contains {n_bad} non-finite value(s).")


def fmt6(x: float) -> str:
    """
    Fixed 6-decimal formatting used by every printed or written number.
    """
    s = f"{x:.6f}"
    # Avoid '-0.000000' so that tiny negative rounding noise is byte-stable.
    return "0.000000" if s == "-0.000000" else s


def strictly_increasing(values: Iterable[float]) -> bool:
    vals = list(values)
    return all(a < b for a, b in zip(vals, vals[1:]))
