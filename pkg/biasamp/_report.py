from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from jinja2 import Environment, PackageLoader, StrictUndefined

from ._aggregate import SweepSummary
from ._logging import logger
from ._metrics import IntervalSummary
from ._utils import fmt6

__all__ = ("emit_report",)

WIDTH = 640
HEIGHT = 400
COLORS = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#17becf",
)
TRAJECTORY_CHARTS = ("bias_amp", "acc", "ece")


def _environment() -> Environment:
    return Environment(
        loader=PackageLoader("biasamp", "templates"),
        autoescape=True,
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )


@dataclass(frozen=True)
class _Plot:
    left: float = 70.0
    right: float = WIDTH - 20.0
    top: float = 40.0
    bottom: float = HEIGHT - 50.0


@dataclass(frozen=True)
class _Line:
    label: str
    xs: list[float]
    intervals: list[IntervalSummary]


def _range(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-12:
        return lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _tick_label(v: float) -> str:
    s = f"{v:.3g}"
    return "0" if s == "-0" else s


def _render_chart(
    env: Environment,
    *,
    title: str,
    x_label: str,
    y_label: str,
    lines: Sequence[_Line],
    vlines: Sequence[float] = (),
    x_tick_values: Optional[Sequence[float]] = None,
    points_only: bool = False,
) -> str:
    plot = _Plot()
    xs = [x for line in lines for x in line.xs]
    lows = [
        iv.mean if iv.ci_low is None else iv.ci_low
        for line in lines
        for iv in line.intervals
    ]
    highs = [
        iv.mean if iv.ci_high is None else iv.ci_high
        for line in lines
        for iv in line.intervals
    ]
    x0, x1 = _range(min(xs), max(xs))
    y0, y1 = _range(min(lows), max(highs))

    def sx(x: float) -> float:
        return plot.left + (x - x0) / (x1 - x0) * (plot.right - plot.left)

    def sy(y: float) -> float:
        return plot.bottom - (y - y0) / (y1 - y0) * (plot.bottom - plot.top)

    def pts(pairs) -> str:
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in pairs)

    series = []
    for i, line in enumerate(lines):
        centre = [(sx(x), sy(iv.mean)) for x, iv in zip(line.xs, line.intervals)]
        upper = [
            (sx(x), sy(iv.mean if iv.ci_high is None else iv.ci_high))
            for x, iv in zip(line.xs, line.intervals)
        ]
        lower = [
            (sx(x), sy(iv.mean if iv.ci_low is None else iv.ci_low))
            for x, iv in zip(line.xs, line.intervals)
        ]
        has_band = any(iv.half_width for iv in line.intervals)
        series.append(
            {
                "label": line.label,
                "color": COLORS[i % len(COLORS)],
                "line": pts(centre) if len(centre) > 1 else "",
                "band": pts(upper + lower[::-1]) if has_band else "",
                "points": [(f"{a:.2f}", f"{b:.2f}") for a, b in centre],
            }
        )

    if x_tick_values is None:
        x_tick_values = [x0 + (x1 - x0) * k / 4 for k in range(5)]
    y_tick_values = [y0 + (y1 - y0) * k / 4 for k in range(5)]

    return env.get_template("chart.svg.j2").render(
        width=WIDTH,
        height=HEIGHT,
        title=title,
        x_label=x_label,
        y_label=y_label,
        plot=plot,
        series=series,
        points_only=points_only,
        x_ticks=[{"pos": f"{sx(v):.2f}", "label": _tick_label(v)} for v in x_tick_values],
        y_ticks=[{"pos": f"{sy(v):.2f}", "label": _tick_label(v)} for v in y_tick_values],
        vlines=[f"{sx(v):.2f}" for v in vlines if x0 <= v <= x1],
    )


def _slug(metric: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", metric).strip("_")


def _fmt_axis(v: Optional[float]) -> str:
    return "" if v is None else fmt6(v)


def _fmt_opt(v: Optional[float]) -> str:
    return "" if v is None else fmt6(v)


def _csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _render(summary: SweepSummary) -> dict[str, str]:
    env = _environment()
    axis_label = summary.axis or "run"
    files: dict[str, str] = {}

    files["summary.csv"] = _csv(
        ["axis", "metric", "mean", "ci_low", "ci_high", "n"],
        [
            [
                _fmt_axis(r.axis_value),
                r.metric,
                fmt6(r.interval.mean),
                _fmt_opt(r.interval.ci_low),
                _fmt_opt(r.interval.ci_high),
                str(r.interval.n),
            ]
            for r in summary.rows
        ],
    )
    files["trajectory.csv"] = _csv(
        ["axis", "epoch", "metric", "mean", "ci_low", "ci_high", "n"],
        [
            [
                _fmt_axis(r.axis_value),
                str(r.epoch),
                r.metric,
                fmt6(r.interval.mean),
                _fmt_opt(r.interval.ci_low),
                _fmt_opt(r.interval.ci_high),
                str(r.interval.n),
            ]
            for r in summary.trajectory
        ],
    )
    files["ece_vs_bias_amp.csv"] = _csv(
        ["axis", "ece", "bias_amp", "n"],
        [
            [_fmt_axis(p.axis_value), fmt6(p.ece), fmt6(p.bias_amp), str(p.n)]
            for p in summary.ece_pairs
        ],
    )

    values = summary.axis_values
    xs = [0.0 if v is None else v for v in values]
    metrics = list(dict.fromkeys(r.metric for r in summary.rows))
    for metric in metrics:
        points = [(x, v) for x, v in zip(xs, values) if _has(summary, v, metric)]
        files[f"{_slug(metric)}.svg"] = _render_chart(
            env,
            title=f"{metric} vs {axis_label} ({summary.level:.0%} CI)",
            x_label=axis_label,
            y_label=metric,
            lines=[
                _Line(
                    label=metric,
                    xs=[x for x, _ in points],
                    intervals=[summary.row(v, metric) for _, v in points],
                )
            ],
            x_tick_values=[x for x, _ in points],
        )

    for metric in TRAJECTORY_CHARTS:
        lines = []
        for v in values:
            rows = [
                r for r in summary.trajectory if r.axis_value == v and r.metric == metric
            ]
            if rows:
                lines.append(
                    _Line(
                        label=f"{axis_label}={_tick_label(v)}" if v is not None else metric,
                        xs=[float(r.epoch) for r in rows],
                        intervals=[r.interval for r in rows],
                    )
                )
        if lines:
            vlines = sorted({m + 0.5 for ms in summary.milestones.values() for m in ms})
            files[f"trajectory_{metric}.svg"] = _render_chart(
                env,
                title=f"{metric} during training ({summary.level:.0%} CI)",
                x_label="epoch",
                y_label=metric,
                lines=lines,
                vlines=vlines,
            )

    if summary.ece_pairs:
        files["ece_vs_bias_amp.svg"] = _render_chart(
            env,
            title="ECE vs bias amplification",
            x_label="ece",
            y_label="bias_amp",
            lines=[
                _Line(
                    label="bias_amp",
                    xs=[p.ece for p in summary.ece_pairs],
                    intervals=[
                        IntervalSummary(p.bias_amp, None, summary.level, p.n)
                        for p in summary.ece_pairs
                    ],
                )
            ],
            points_only=True,
        )
    return files


def _has(summary: SweepSummary, axis_value: Optional[float], metric: str) -> bool:
    try:
        summary.row(axis_value, metric)
    except KeyError:
        return False
    return True


def emit_report(summary: SweepSummary, out_dir: Union[str, Path]) -> list[Path]:
    """
    Write CSV tables and SVG charts for a sweep summary.

    Writes `summary.csv` (`axis,metric,mean,ci_low,ci_high,n`),
    `trajectory.csv` (`axis,epoch,metric,mean,ci_low,ci_high,n`),
    `ece_vs_bias_amp.csv` (`axis,ece,bias_amp,n`), one `<metric>.svg` per
    summarized metric with a shaded confidence band, one
    `trajectory_<metric>.svg` per training-curve metric (learning-rate
    milestones dashed) and an ECE/bias-amplification scatter. Numbers are
    printed with six decimals, so identical summaries give identical files.

    Parameters
    ----------
    summary
        The output of [](`~biasamp.aggregate`).
    out_dir
        Directory to write into (created if needed).

    Returns
    -------
    list[Path]
        The written files, sorted by name.

    Raises
    ------
    ValueError
        If the summary is empty; nothing is written.
    """
    if not summary.rows:
        raise ValueError("Cannot emit a report for an empty summary.")

    files = _render(summary)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(files):
        path = out / name
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(files[name])
        paths.append(path)
    logger.info(f"Wrote {len(paths)} report files to {out}.")
    return paths
