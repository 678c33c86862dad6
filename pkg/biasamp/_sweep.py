from __future__ import annotations

import asyncio
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Optional

from ._config import IngestedSource, SweepAxis, SweepGrid, TrialConfig
from ._errors import ConfigurationError
from ._experiment import RunRecord, run_trial
from ._logging import log_trial_failure, log_trial_skipped
from ._merge import merge_dicts, nested
from ._progress import LiveSweepProgress, MockSweepProgress, SweepProgress
from ._random import derive_seed
from ._store import RunStore

__all__ = (
    "SweepResult",
    "TrialFailure",
    "TrialSpec",
    "apply_axis",
    "axis_value_of",
    "sweep",
    "sweep_async",
    "sweep_trials",
)


def _axis_path(base: TrialConfig, axis: SweepAxis) -> str:
    if axis == "epsilon":
        return "bias.epsilon"
    if axis == "eta":
        if isinstance(base.dataset, IngestedSource):
            if base.mix is None:
                raise ConfigurationError(
                    "the eta axis needs the mixing protocol (set `mix`) on ingested data"
                )
            return "mix.eta"
        return "dataset.synth.eta"
    if axis in ("depth", "width"):
        if base.arch.family == "linear":
            raise ConfigurationError(f"the {axis} axis does not apply to linear models")
        return f"arch.{axis}"
    if axis == "weight_decay":
        return "train.weight_decay"
    if axis == "train_fraction":
        return "train_fraction"
    raise ConfigurationError(f"unknown sweep axis '{axis}'")


def axis_value_of(cfg: TrialConfig, axis: SweepAxis) -> Optional[float]:
    """
    The value a trial takes on a sweep axis.

    `None` when the axis is unset (a synthetic trial without `eta`).
    """
    obj: Any = cfg
    for part in _axis_path(cfg, axis).split("."):
        obj = getattr(obj, part)
    if obj is None:
        return None
    return float(obj)


def apply_axis(
    base: TrialConfig,
    axis: SweepAxis,
    value: float,
    seed: Optional[int] = None,
) -> TrialConfig:
    """
    Set one sweep axis (and optionally the seed) of a trial configuration.

    The override is merged into the base configuration and the result is
    validated again, so a swept value outside its domain fails the same way
    a hand-written one does.
    """
    path = _axis_path(base, axis)
    v: Any = int(value) if axis in ("depth", "width") else value
    overrides = [nested(path, v)]
    if seed is not None:
        overrides.append({"seed": seed})
    data = merge_dicts(base.model_dump(mode="json"), *overrides)
    return TrialConfig.model_validate(data)


@dataclass(frozen=True)
class TrialSpec:
    axis: SweepAxis
    value: float
    seed_index: int
    trial: TrialConfig


def sweep_trials(grid: SweepGrid, base: TrialConfig) -> list[TrialSpec]:
    """
    Expand a grid into `len(values) * seeds` trials.

    The seed of each trial is derived from the base seed, the axis value and
    the seed index, so every trial draws from its own substreams.
    """
    specs = []
    for value in grid.values:
        for i in range(grid.seeds):
            seed = derive_seed("trial", base.seed, grid.axis, value, i) % 2**32
            specs.append(
                TrialSpec(
                    axis=grid.axis,
                    value=value,
                    seed_index=i,
                    trial=apply_axis(base, grid.axis, value, seed),
                )
            )
    return specs


@dataclass(frozen=True)
class TrialFailure:
    key: str
    spec: TrialSpec
    error_type: str
    error: str


@dataclass
class SweepResult:
    """
    Records of a sweep in grid order, plus the trials that failed.
    """

    records: list[RunRecord] = field(default_factory=list)
    failures: list[TrialFailure] = field(default_factory=list)
    skipped: int = 0


def _run_one(spec: TrialSpec, store: Optional[RunStore]) -> RunRecord | TrialFailure:
    key = spec.trial.key()
    try:
        record = run_trial(spec.trial).model_copy(
            update={
                "axis": spec.axis,
                "axis_value": spec.value,
                "seed_index": spec.seed_index,
            }
        )
    except Exception as e:
        log_trial_failure(key, e)
        if store is not None:
            store.append_failure(key, spec.trial, e)
        return TrialFailure(key, spec, type(e).__name__, str(e))
    if store is not None:
        store.append(record)
    return record


def _pending(
    specs: list[TrialSpec], store: Optional[RunStore]
) -> tuple[dict[int, RunRecord], list[tuple[int, TrialSpec]]]:
    done = store.completed() if store is not None else {}
    finished: dict[int, RunRecord] = {}
    todo: list[tuple[int, TrialSpec]] = []
    for i, spec in enumerate(specs):
        key = spec.trial.key()
        if key in done:
            log_trial_skipped(key)
            finished[i] = done[key]
        else:
            todo.append((i, spec))
    return finished, todo


def _collect(
    n: int,
    finished: dict[int, RunRecord],
    outcomes: dict[int, RunRecord | TrialFailure],
) -> SweepResult:
    result = SweepResult(skipped=len(finished))
    for i in range(n):
        out = finished.get(i, outcomes.get(i))
        if isinstance(out, RunRecord):
            result.records.append(out)
        elif isinstance(out, TrialFailure):
            result.failures.append(out)
    return result


def sweep(
    grid: SweepGrid,
    base: TrialConfig,
    *,
    store: Optional[RunStore] = None,
    concurrency: int = 1,
    progress: bool = False,
) -> SweepResult:
    """
    Run every trial of a one-axis grid.

    Parameters
    ----------
    grid
        The axis, its values and the number of seeds per value.
    base
        The trial every grid point starts from.
    store
        Where to stream records as trials finish. Trials whose record is
        already in the store are skipped, so an interrupted sweep resumes.
    concurrency
        Maximum number of trials run at once (in threads).
    progress
        Show a live progress bar.

    Returns
    -------
    SweepResult
        Records in grid order; a failed trial is quarantined (logged and
        written to the store's failure file) and does not stop the sweep.
    """
    if concurrency < 1:
        raise ConfigurationError(f"concurrency must be at least 1, got {concurrency}")
    specs = sweep_trials(grid, base)
    finished, todo = _pending(specs, store)
    outcomes: dict[int, RunRecord | TrialFailure] = {}

    display: SweepProgress = (
        LiveSweepProgress(len(todo), name=f"{grid.axis} sweep")
        if progress
        else MockSweepProgress()
    )
    with display:
        if concurrency == 1:
            for i, spec in todo:
                outcomes[i] = _run_one(spec, store)
                display.advance()
        else:
            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                futures = {pool.submit(_run_one, spec, store): i for i, spec in todo}
                for fut in as_completed(futures):
                    outcomes[futures[fut]] = fut.result()
                    display.advance()

    return _collect(len(specs), finished, outcomes)


async def sweep_async(
    grid: SweepGrid,
    base: TrialConfig,
    *,
    store: Optional[RunStore] = None,
    concurrency: int = 1,
) -> SweepResult:
    """
    Run a sweep from async code.

    Same as [](`~biasamp.sweep`), with trials run in worker threads and at
    most `concurrency` in flight.
    """
    if concurrency < 1:
        raise ConfigurationError(f"concurrency must be at least 1, got {concurrency}")
    specs = sweep_trials(grid, base)
    finished, todo = _pending(specs, store)
    semaphore = asyncio.Semaphore(concurrency)

    async def run(i: int, spec: TrialSpec):
        async with semaphore:
            return i, await asyncio.to_thread(_run_one, spec, store)

    results = await asyncio.gather(*(run(i, spec) for i, spec in todo))
    return _collect(len(specs), finished, dict(results))
