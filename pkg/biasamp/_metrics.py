"""
Directional bias amplification, calibration and accuracy measures.

All rates are computed from integer counts; exact rationals
(`fractions.Fraction`) are used until the final conversion to float so that
comparisons such as the direction indicator are decided exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from ._errors import MetricError
from ._train import PredictionRecord, PredictionTable

__all__ = (
    "AccuracyCell",
    "BiasAmpBreakdown",
    "BiasAmpCell",
    "CalibrationBin",
    "CalibrationTable",
    "CellRates",
    "DisaggregatedAccuracy",
    "IntervalSummary",
    "accuracy",
    "bias_amp",
    "conditional_rates",
    "confidence_interval",
    "direction_y",
    "disaggregated_accuracy",
    "ece",
    "spearman",
)

Records = Union[PredictionTable, Sequence[PredictionRecord]]

DEFAULT_GROUPS = ("a", "b")
CLASSES = (1, -1)


def _table(records: Records, groups: Sequence[str]) -> PredictionTable:
    table = PredictionTable.from_records(records)
    unknown = sorted(set(np.unique(table.group).tolist()) - set(groups))
    if unknown:
        raise MetricError(
            f"unexpected group(s) {unknown}; expected {list(groups)}",
            group=unknown[0],
        )
    return table


@dataclass(frozen=True)
class _Counts:
    n: int
    group: dict[str, int]
    true: dict[int, int]
    joint: dict[tuple[str, int], int]
    predicted: dict[tuple[str, int], int]


def _count(table: PredictionTable, groups: Sequence[str]) -> _Counts:
    in_group = {a: table.group == a for a in groups}
    return _Counts(
        n=len(table),
        group={a: int(np.count_nonzero(m)) for a, m in in_group.items()},
        true={t: int(np.count_nonzero(table.true_class == t)) for t in CLASSES},
        joint={
            (a, t): int(np.count_nonzero(m & (table.true_class == t)))
            for a, m in in_group.items()
            for t in CLASSES
        },
        predicted={
            (a, t): int(np.count_nonzero(m & (table.predicted_class == t)))
            for a, m in in_group.items()
            for t in CLASSES
        },
    )


def _require_groups(counts: _Counts) -> None:
    for a, n_a in counts.group.items():
        if n_a == 0:
            raise MetricError(f"group '{a}' has no records", group=a)


@dataclass(frozen=True)
class CellRates:
    """
    Dataset and prediction rates of class `class_label` within `group`.
    """

    group: str
    class_label: int
    count: int
    predicted_count: int
    group_count: int

    @property
    def dataset_rate(self) -> float:
        return self.count / self.group_count

    @property
    def prediction_rate(self) -> float:
        return self.predicted_count / self.group_count


def conditional_rates(
    records: Records,
    groups: Sequence[str] = DEFAULT_GROUPS,
) -> dict[tuple[str, int], CellRates]:
    """
    Empirical `Pr(T_t = 1 | A_a = 1)` and `Pr(T̂_t = 1 | A_a = 1)` for every
    group `a` and class `t`.

    Parameters
    ----------
    records
        Prediction records (a [](`~biasamp.PredictionTable`) or a sequence of
        [](`~biasamp.PredictionRecord`)).
    groups
        The two group names.

    Returns
    -------
    dict[tuple[str, int], CellRates]
        Keyed by `(group, class)`.

    Raises
    ------
    MetricError
        If a group has no records (the error's `group` names it).
    """
    counts = _count(_table(records, groups), groups)
    _require_groups(counts)
    return {
        (a, t): CellRates(
            group=a,
            class_label=t,
            count=counts.joint[(a, t)],
            predicted_count=counts.predicted[(a, t)],
            group_count=counts.group[a],
        )
        for a in groups
        for t in CLASSES
    }


def _direction(counts: _Counts, a: str, t: int) -> int:
    # Pr(T_t, A_a) > Pr(T_t) Pr(A_a)  <=>  n_ta * N > n_t * n_a
    return int(counts.joint[(a, t)] * counts.n > counts.true[t] * counts.group[a])


def direction_y(
    records: Records,
    a: str,
    t: int,
    groups: Sequence[str] = DEFAULT_GROUPS,
) -> int:
    """
    1 if class `t` co-occurs with group `a` more often than independence
    would imply, else 0. Exact independence gives 0.
    """
    if t not in CLASSES:
        raise ValueError(f"class must be -1 or +1, got {t}")
    if a not in groups:
        raise MetricError(f"unknown group '{a}'", group=a)
    counts = _count(_table(records, groups), groups)
    _require_groups(counts)
    return _direction(counts, a, t)


@dataclass(frozen=True)
class BiasAmpCell:
    """
    One (group, class) term of the bias amplification sum.

    Parameters
    ----------
    group, class_label
        The cell.
    dataset_rate
        `Pr(T_t = 1 | A_a = 1)` over true labels.
    prediction_rate
        `Pr(T̂_t = 1 | A_a = 1)` over predictions.
    delta
        `prediction_rate - dataset_rate`.
    direction
        1 if class and group are positively associated in the true labels.
    flagged
        The class occurs in the group's true labels but is never predicted
        for it, so the prediction rate is 0.
    """

    group: str
    class_label: int
    dataset_rate: float
    prediction_rate: float
    delta: float
    direction: int
    flagged: bool


@dataclass(frozen=True)
class BiasAmpBreakdown:
    """
    Directional bias amplification from groups to classes with its per-cell
    terms. Positive values mean amplification, negative values dampening.
    """

    cells: tuple[BiasAmpCell, ...]
    value: float

    def cell(self, group: str, class_label: int) -> BiasAmpCell:
        for c in self.cells:
            if c.group == group and c.class_label == class_label:
                return c
        raise KeyError((group, class_label))

    @property
    def flagged_cells(self) -> list[tuple[str, int]]:
        return [(c.group, c.class_label) for c in self.cells if c.flagged]


def bias_amp(
    records: Records,
    groups: Sequence[str] = DEFAULT_GROUPS,
) -> BiasAmpBreakdown:
    """
    Directional bias amplification (groups → classes).

    For every group `a` and class `t`, `delta_at` is the prediction rate of
    `t` in `a` minus its rate in the true labels, and `y_at` says whether `t`
    and `a` are positively associated in the true labels. The score is

        1 / (|groups| * |classes|) * sum(y_at * delta_at - (1 - y_at) * delta_at)

    Both rates come from the same records, normally the test split.

    Raises
    ------
    MetricError
        If a group or a class is absent from the true labels.
    """
    counts = _count(_table(records, groups), groups)
    _require_groups(counts)
    for t in CLASSES:
        if counts.true[t] == 0:
            raise MetricError(f"class {t:+d} has no records")

    cells = []
    total = Fraction(0)
    for a in groups:
        for t in CLASSES:
            dataset_rate = Fraction(counts.joint[(a, t)], counts.group[a])
            prediction_rate = Fraction(counts.predicted[(a, t)], counts.group[a])
            delta = prediction_rate - dataset_rate
            y = _direction(counts, a, t)
            total += delta if y else -delta
            cells.append(
                BiasAmpCell(
                    group=a,
                    class_label=t,
                    dataset_rate=float(dataset_rate),
                    prediction_rate=float(prediction_rate),
                    delta=float(delta),
                    direction=y,
                    flagged=counts.joint[(a, t)] > 0 and counts.predicted[(a, t)] == 0,
                )
            )

    value = total / (len(groups) * len(CLASSES))
    return BiasAmpBreakdown(cells=tuple(cells), value=float(value))


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    count: int
    mean_confidence: Optional[float]
    accuracy: Optional[float]


@dataclass(frozen=True)
class CalibrationTable:
    """
    Equal-width confidence bins and the expected calibration error.

    Bin `k` (1-based) holds confidences in `((k - 1) / B, k / B]`; the first
    bin also holds 0. Empty bins have `None` mean confidence and accuracy.
    """

    bins: tuple[CalibrationBin, ...]
    ece: float
    n: int


def ece(records: Records, bin_count: int = 15) -> CalibrationTable:
    """
    Expected calibration error: the count-weighted mean of
    `|accuracy - mean confidence|` over confidence bins.

    Parameters
    ----------
    records
        Prediction records with confidences in [0, 1].
    bin_count
        Number of equal-width bins.
    """
    if bin_count < 1:
        raise ValueError(f"bin_count must be at least 1, got {bin_count}")
    table = PredictionTable.from_records(records)
    n = len(table)
    if n == 0:
        raise MetricError("cannot compute calibration error without records")

    uppers = np.arange(1, bin_count + 1, dtype=np.float64) / bin_count
    index = np.minimum(
        np.searchsorted(uppers, table.confidence, side="left"), bin_count - 1
    )
    correct = table.correct

    bins = []
    terms = []
    for k in range(bin_count):
        members = index == k
        count = int(np.count_nonzero(members))
        if count == 0:
            bins.append(CalibrationBin(k / bin_count, float(uppers[k]), 0, None, None))
            continue
        conf = math.fsum(table.confidence[members]) / count
        acc = int(np.count_nonzero(correct[members])) / count
        bins.append(CalibrationBin(k / bin_count, float(uppers[k]), count, conf, acc))
        terms.append(count / n * abs(acc - conf))

    return CalibrationTable(bins=tuple(bins), ece=math.fsum(terms), n=n)


@dataclass(frozen=True)
class AccuracyCell:
    class_label: int
    group: str
    count: int
    correct: int

    @property
    def accuracy(self) -> Optional[float]:
        """
        Accuracy of the cell, or `None` when the cell is empty.
        """
        return self.correct / self.count if self.count else None


@dataclass(frozen=True)
class DisaggregatedAccuracy:
    """
    Accuracy within each of the four (class, group) cells.
    """

    cells: tuple[AccuracyCell, ...]

    def get(self, class_label: int, group: str) -> AccuracyCell:
        for c in self.cells:
            if c.class_label == class_label and c.group == group:
                return c
        raise KeyError((class_label, group))

    def as_dict(self) -> dict[str, Optional[float]]:
        """
        Accuracies keyed `"+1/a"`, `"-1/a"`, `"+1/b"`, `"-1/b"`.
        """
        return {f"{c.class_label:+d}/{c.group}": c.accuracy for c in self.cells}


def disaggregated_accuracy(
    records: Records,
    groups: Sequence[str] = DEFAULT_GROUPS,
) -> DisaggregatedAccuracy:
    table = _table(records, groups)
    correct = table.correct
    cells = []
    for a in groups:
        for t in CLASSES:
            members = (table.group == a) & (table.true_class == t)
            cells.append(
                AccuracyCell(
                    class_label=t,
                    group=a,
                    count=int(np.count_nonzero(members)),
                    correct=int(np.count_nonzero(members & correct)),
                )
            )
    return DisaggregatedAccuracy(cells=tuple(cells))


def accuracy(records: Records) -> float:
    table = PredictionTable.from_records(records)
    if len(table) == 0:
        raise MetricError("cannot compute accuracy without records")
    return int(np.count_nonzero(table.correct)) / len(table)


@dataclass(frozen=True)
class IntervalSummary:
    """
    A mean with a two-sided Student-t confidence interval.

    Parameters
    ----------
    mean
        Sample mean.
    half_width
        Distance from the mean to either interval edge; `None` when `n == 1`.
    level
        Confidence level.
    n
        Number of values.
    """

    mean: float
    half_width: Optional[float]
    level: float
    n: int

    @property
    def ci_low(self) -> Optional[float]:
        return None if self.half_width is None else self.mean - self.half_width

    @property
    def ci_high(self) -> Optional[float]:
        return None if self.half_width is None else self.mean + self.half_width

    def contains(self, x: float) -> bool:
        if self.half_width is None:
            return False
        return self.mean - self.half_width <= x <= self.mean + self.half_width


def confidence_interval(
    values: Sequence[float],
    level: float = 0.95,
) -> IntervalSummary:
    """
    Mean and Student-t confidence interval of a set of trial results.

    The half-width is `t_q(n - 1) * s / sqrt(n)` with `q = (1 + level) / 2`
    and `s` the population standard deviation of the values (so `{0, 1}`
    gives `12.706 * 0.5 / sqrt(2) ≈ 4.493`).

    Parameters
    ----------
    values
        At least one finite value.
    level
        Confidence level in (0, 1).
    """
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("confidence_interval() requires at least one value")
    if not np.all(np.isfinite(x)):
        raise ValueError("confidence_interval() requires finite values")

    if np.all(x == x[0]):
        mean = float(x[0])
        return IntervalSummary(mean, None if n == 1 else 0.0, level, n)

    mean = math.fsum(x) / n
    if n == 1:
        return IntervalSummary(mean, None, level, n)
    std = math.sqrt(math.fsum((x - mean) ** 2) / n)
    q = float(stats.t.ppf(0.5 + level / 2.0, df=n - 1))
    return IntervalSummary(mean, q * std / math.sqrt(n), level, n)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Spearman rank correlation of two equally long sequences.
    """
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("spearman() needs two sequences of equal length >= 2")
    return float(stats.spearmanr(x, y)[0])
