from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ._config import SweepAxis
from ._experiment import EpochMetrics, RunRecord
from ._metrics import IntervalSummary, confidence_interval
from ._schedule import milestones
from ._sweep import axis_value_of

__all__ = ("EcePoint", "SummaryRow", "SweepSummary", "TrajectoryRow", "aggregate")

SUMMARY_METRICS = ("bias_amp", "acc", "ece")
TRAJECTORY_METRICS = ("bias_amp", "acc", "ece", "lr")


@dataclass(frozen=True)
class SummaryRow:
    axis_value: Optional[float]
    metric: str
    interval: IntervalSummary


@dataclass(frozen=True)
class TrajectoryRow:
    axis_value: Optional[float]
    epoch: int
    metric: str
    interval: IntervalSummary


@dataclass(frozen=True)
class EcePoint:
    """
    Mean calibration error and mean bias amplification of one grid point.
    """

    axis_value: Optional[float]
    ece: float
    bias_amp: float
    n: int


@dataclass
class SweepSummary:
    """
    Per-point confidence intervals of a sweep's records.

    Parameters
    ----------
    axis
        The swept axis (`None` for repeated runs of a single configuration).
    rows
        Final-metric summaries per (axis value, metric).
    trajectory
        Per-epoch summaries per (axis value, epoch, metric).
    ece_pairs
        One (ece, bias_amp) point per axis value.
    milestones
        Learning-rate decay epochs per axis value.
    level
        Confidence level of every interval.
    """

    axis: Optional[SweepAxis]
    rows: list[SummaryRow] = field(default_factory=list)
    trajectory: list[TrajectoryRow] = field(default_factory=list)
    ece_pairs: list[EcePoint] = field(default_factory=list)
    milestones: dict[Optional[float], list[int]] = field(default_factory=dict)
    level: float = 0.95

    @property
    def axis_values(self) -> list[Optional[float]]:
        return sorted({r.axis_value for r in self.rows}, key=_sort_key)

    def row(self, axis_value: Optional[float], metric: str) -> IntervalSummary:
        for r in self.rows:
            if r.axis_value == axis_value and r.metric == metric:
                return r.interval
        raise KeyError((axis_value, metric))


def _sort_key(v: Optional[float]) -> float:
    return float("-inf") if v is None else v


def _cell_values(records: Sequence[RunRecord]) -> dict[str, list[float]]:
    out: dict[str, list[float]] = defaultdict(list)
    for r in records:
        for cell, acc in r.final.acc_cells.items():
            if acc is not None:
                out[f"acc[{cell}]"].append(acc)
    return out


def _epoch_values(m: EpochMetrics) -> dict[str, float]:
    vals = {name: getattr(m, name) for name in TRAJECTORY_METRICS}
    for cell, acc in m.acc_cells.items():
        if acc is not None:
            vals[f"acc[{cell}]"] = acc
    return vals


def aggregate(
    records: Sequence[RunRecord],
    axis: Optional[SweepAxis] = None,
    *,
    level: float = 0.95,
) -> SweepSummary:
    """
    Summarize run records per sweep point with Student-t confidence intervals.

    Parameters
    ----------
    records
        Sealed run records (in any order; the result does not depend on it).
    axis
        The axis to group by. Records without a stored axis value take it
        from their trial configuration (records where the axis is unset,
        such as a synthetic trial without `eta`, form one point keyed by
        `None`); with `axis=None` all records form one point.
    level
        Confidence level.

    Returns
    -------
    SweepSummary
        Final metrics (bias_amp, acc, ece, the four accuracy cells and the
        probe accuracy when present), per-epoch trajectories and the
        ECE/bias-amplification pairing.
    """
    if not records:
        raise ValueError("aggregate() requires at least one record")

    points: dict[Optional[float], list[RunRecord]] = defaultdict(list)
    for r in records:
        if axis is None:
            value = None
        elif r.axis == axis and r.axis_value is not None:
            value = r.axis_value
        else:
            value = axis_value_of(r.trial, axis)
        points[value].append(r)

    summary = SweepSummary(axis=axis, level=level)
    for value in sorted(points, key=_sort_key):
        group = points[value]
        per_metric: dict[str, list[float]] = {
            name: [getattr(r.final, name) for r in group] for name in SUMMARY_METRICS
        }
        per_metric.update(sorted(_cell_values(group).items()))
        probes = [r.probe_accuracy for r in group if r.probe_accuracy is not None]
        if probes:
            per_metric["probe_acc"] = probes
        for name, values in per_metric.items():
            summary.rows.append(
                SummaryRow(value, name, confidence_interval(values, level))
            )

        summary.ece_pairs.append(
            EcePoint(
                axis_value=value,
                ece=summary.row(value, "ece").mean,
                bias_amp=summary.row(value, "bias_amp").mean,
                n=len(group),
            )
        )
        summary.milestones[value] = milestones(group[0].trial.train_recipe)

        by_epoch: dict[tuple[int, str], list[float]] = defaultdict(list)
        for r in group:
            for m in r.trajectory:
                for name, v in _epoch_values(m).items():
                    by_epoch[(m.epoch, name)].append(v)
        for (epoch, name), values in sorted(by_epoch.items()):
            summary.trajectory.append(
                TrajectoryRow(value, epoch, name, confidence_interval(values, level))
            )

    return summary
