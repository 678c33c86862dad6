from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict

from ._config import ArchConfig, IngestedSource, SweepAxis, TrainConfig, TrialConfig
from ._dataset import GROUP_NAMES, ExampleSet, NormalizationStats, RawDataset
from ._errors import ConfigurationError, UnsupportedOperationError
from ._ingest import ingest_many, load_raw
from ._logging import log_epoch, log_trial_done, log_trial_start, logger
from ._metrics import accuracy, bias_amp, disaggregated_accuracy, ece
from ._model import ModelState, save_checkpoint
from ._random import derive_seed
from ._schedule import effective_epochs
from ._synth import synth_generate
from ._train import PredictionTable, predict, train
from ._transforms import (
    binarize_labels,
    build_inversion_examples,
    build_mixed_examples,
    compute_normalization,
    normalize_examples,
    relabel_swap_roles,
    relabel_to_group,
    stratified_subsample,
)
from ._version import SCHEMA_VERSION, __version__

__all__ = (
    "DatasetSummary",
    "EpochMetrics",
    "FinalMetrics",
    "RunRecord",
    "TrialData",
    "build_datasets",
    "probe_group_recognizability",
    "replay",
    "run_trial",
    "swap_roles",
)


class EpochMetrics(BaseModel):
    """
    Test-split metrics after one training epoch.
    """

    model_config = ConfigDict(frozen=True)

    epoch: int
    lr: float
    bias_amp: float
    acc: float
    ece: float
    acc_cells: dict[str, Optional[float]]


class FinalMetrics(BaseModel):
    """
    Test-split metrics of the final model.

    Parameters
    ----------
    bias_amp, acc, ece
        Bias amplification, accuracy and expected calibration error.
    acc_cells
        Accuracy per `"<class>/<group>"` cell; `None` marks an empty cell.
    delta, direction
        Per-cell bias amplification terms.
    flagged_cells
        Cells whose class occurs in the group but is never predicted for it.
    """

    model_config = ConfigDict(frozen=True)

    bias_amp: float
    acc: float
    ece: float
    acc_cells: dict[str, Optional[float]]
    delta: dict[str, float]
    direction: dict[str, int]
    flagged_cells: list[str]


class DatasetSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str
    train_size: int
    test_size: int
    train_cells: dict[str, int]
    test_cells: dict[str, int]
    normalization: Optional[dict[str, list[float]]] = None


class RunRecord(BaseModel):
    """
    The complete, self-contained record of one trial.

    Re-running `trial` (see [](`~biasamp.replay`)) reproduces every field but
    `wall_time` exactly.
    """

    model_config = ConfigDict(frozen=True)

    schema_version: int = SCHEMA_VERSION
    tool_version: str = __version__
    trial_key: str
    trial: TrialConfig
    axis: Optional[SweepAxis] = None
    axis_value: Optional[float] = None
    seed_index: Optional[int] = None
    substreams: dict[str, int]
    dataset: DatasetSummary
    trajectory: list[EpochMetrics]
    final: FinalMetrics
    probe_accuracy: Optional[float] = None
    warnings: list[str] = []
    wall_time: float = 0.0

    def content(self) -> dict:
        """
        Everything but the wall time, as JSON-compatible data.
        """
        return self.model_dump(mode="json", exclude={"wall_time"})


@dataclass(frozen=True)
class TrialData:
    """
    The normalized train and test splits of a trial.
    """

    train: ExampleSet
    test: ExampleSet
    normalization: Optional[NormalizationStats] = None


@lru_cache(maxsize=8)
def _load_source(fmt: str, paths: tuple[str, ...], split: str) -> RawDataset:
    if fmt == "cache":
        return load_raw(paths[0])
    return ingest_many(list(paths), fmt, split=split)  # type: ignore[arg-type]


def build_datasets(cfg: TrialConfig) -> TrialData:
    """
    Build a trial's train and test splits.

    The pipeline is: binarize classes (or pick the mixing task classes),
    assign groups (inverting or mixing images), subsample the training
    split, optionally exchange class and group roles, and normalize with
    statistics of the original training images.
    """
    seed = cfg.seed
    src = cfg.dataset
    stats: Optional[NormalizationStats] = None

    if isinstance(src, IngestedSource):
        raw_train = _load_source(src.format, tuple(src.train), "train")
        raw_test = _load_source(src.format, tuple(src.test), "test")
        if raw_train.num_classes != raw_test.num_classes:
            raise ConfigurationError(
                f"train and test splits disagree on the class count "
                f"({raw_train.num_classes} vs {raw_test.num_classes})"
            )
        stats = compute_normalization(raw_train)
        if cfg.bias.convention == "mixing":
            assert cfg.mix is not None
            train_set = build_mixed_examples(raw_train, cfg.mix, cfg.bias, seed)
            test_set = build_mixed_examples(raw_test, cfg.mix, cfg.bias.for_test(), seed)
        else:
            mapping = binarize_labels(raw_train, seed)
            train_set = build_inversion_examples(raw_train, mapping, cfg.bias, seed)
            test_set = build_inversion_examples(
                raw_test, mapping, cfg.bias.for_test(), seed
            )
    else:
        train_set, test_set = synth_generate(src.synth, cfg.bias, seed)

    train_set = stratified_subsample(train_set, cfg.train_fraction, seed)
    if cfg.role_swap:
        train_set = relabel_swap_roles(train_set)
        test_set = relabel_swap_roles(test_set)

    return TrialData(
        train=normalize_examples(train_set, stats),
        test=normalize_examples(test_set, stats),
        normalization=stats,
    )


def trial_substreams(cfg: TrialConfig) -> dict[str, int]:
    """
    The PRNG substream seeds a trial draws from, keyed by operation.
    """
    s = cfg.seed
    conv = cfg.bias.convention
    out: dict[str, int] = {}
    if isinstance(cfg.dataset, IngestedSource):
        if conv == "inversion":
            out["binarize_labels"] = derive_seed("binarize_labels", s)
        for split in ("train", "test"):
            out[f"assign_groups/{split}"] = derive_seed("assign_groups", conv, s, split)
            if conv == "mixing":
                out[f"mix_group_images/{split}"] = derive_seed("mix_group_images", s, split)
    else:
        for split in ("train", "test"):
            out[f"synth_generate/{split}"] = derive_seed("synth_generate", s, split)
            out[f"assign_groups/{split}"] = derive_seed(
                "assign_groups", conv, s, "synthetic", split
            )
    if cfg.train_fraction < 1.0:
        for t in (1, -1):
            for g, name in GROUP_NAMES.items():
                out[f"stratified_subsample/{t:+d}/{name}"] = derive_seed(
                    "stratified_subsample", s, t, g
                )
    out["init_model"] = derive_seed("init_model", s)
    for epoch in range(1, effective_epochs(cfg.train_recipe) + 1):
        out[f"train_epoch/{epoch}"] = derive_seed("train_epoch", s, epoch)
    if cfg.probe:
        out["probe"] = _probe_seed(s)
    return out


def _probe_seed(seed: int) -> int:
    return derive_seed("probe", seed) % 2**32


def _cell_key(t: int, group: str) -> str:
    return f"{t:+d}/{group}"


def _epoch_metrics(epoch: int, lr: float, preds: PredictionTable) -> EpochMetrics:
    return EpochMetrics(
        epoch=epoch,
        lr=lr,
        bias_amp=bias_amp(preds).value,
        acc=accuracy(preds),
        ece=ece(preds).ece,
        acc_cells=disaggregated_accuracy(preds).as_dict(),
    )


def _final_metrics(preds: PredictionTable) -> FinalMetrics:
    breakdown = bias_amp(preds)
    return FinalMetrics(
        bias_amp=breakdown.value,
        acc=accuracy(preds),
        ece=ece(preds).ece,
        acc_cells=disaggregated_accuracy(preds).as_dict(),
        delta={_cell_key(c.class_label, c.group): c.delta for c in breakdown.cells},
        direction={
            _cell_key(c.class_label, c.group): c.direction for c in breakdown.cells
        },
        flagged_cells=[_cell_key(t, a) for a, t in breakdown.flagged_cells],
    )


def _dataset_summary(cfg: TrialConfig, data: TrialData) -> DatasetSummary:
    def cells(examples: ExampleSet) -> dict[str, int]:
        return {
            _cell_key(t, GROUP_NAMES[g]): n for (t, g), n in examples.cell_counts().items()
        }

    stats = data.normalization
    return DatasetSummary(
        source=cfg.dataset.kind,
        train_size=len(data.train),
        test_size=len(data.test),
        train_cells=cells(data.train),
        test_cells=cells(data.test),
        normalization=None
        if stats is None
        else {"mean": stats.mean.tolist(), "std": stats.std.tolist()},
    )


def probe_group_recognizability(
    dataset: tuple[ExampleSet, ExampleSet],
    arch: ArchConfig,
    train_cfg: TrainConfig,
    seed: int,
) -> float:
    """
    How well a fresh model can recognize group membership.

    Trains a new classifier to predict the group (instead of the class) of
    the training split and returns its accuracy on the test split.

    Parameters
    ----------
    dataset
        The `(train, test)` splits, groups assigned.
    arch, train_cfg
        The probe's architecture and recipe.
    seed
        Probe seed; the probe draws from its own substreams.
    """
    train_set, test_set = dataset
    result = train(arch, train_cfg, relabel_to_group(train_set), _probe_seed(seed))
    return accuracy(predict(result.state, relabel_to_group(test_set)))


def run_trial(
    cfg: TrialConfig,
    *,
    checkpoint_path: Optional[Union[str, Path]] = None,
) -> RunRecord:
    """
    Run one trial: build the data, train, and measure after every epoch.

    Parameters
    ----------
    cfg
        The trial. Its `seed` drives every random draw.
    checkpoint_path
        Where to save the final model, if anywhere.

    Returns
    -------
    RunRecord
        The sealed record; its trajectory has one entry per effective epoch.
    """
    key = cfg.key()
    log_trial_start(key, cfg)
    start = time.perf_counter()

    data = build_datasets(cfg)
    recipe = cfg.train_recipe

    def snapshot(epoch: int, state: ModelState, lr: float) -> EpochMetrics:
        m = _epoch_metrics(epoch, lr, predict(state, data.test))
        log_epoch(epoch, lr, m.bias_amp, m.acc)
        return m

    result = train(cfg.arch, recipe, data.train, cfg.seed, snapshot)
    final = _final_metrics(predict(result.state, data.test))
    if checkpoint_path is not None:
        save_checkpoint(result.state, checkpoint_path)

    probe_acc = None
    if cfg.probe:
        probe_acc = probe_group_recognizability(
            (data.train, data.test), cfg.arch, recipe, cfg.seed
        )
        logger.info(f"Group probe accuracy: {probe_acc:.6f}")

    if len(result.snapshots) != effective_epochs(recipe):
        raise AssertionError("trajectory length must equal the effective epoch count")

    elapsed = time.perf_counter() - start
    log_trial_done(key, final.bias_amp, final.acc, elapsed)
    return RunRecord(
        trial_key=key,
        trial=cfg,
        substreams=trial_substreams(cfg),
        dataset=_dataset_summary(cfg, data),
        trajectory=result.snapshots,
        final=final,
        probe_accuracy=probe_acc,
        warnings=list(data.train.notes),
        wall_time=elapsed,
    )


def swap_roles(cfg: TrialConfig) -> TrialConfig:
    """
    Exchange the roles of class and group.

    With roles swapped the class label says whether an image is inverted and
    the group follows the original class, on the very same pixels. Applying
    the swap twice gives back the original configuration.

    Raises
    ------
    UnsupportedOperationError
        For the mixing protocol.
    """
    if cfg.bias.convention != "inversion":
        raise UnsupportedOperationError(
            "swap_roles() only supports the inversion protocol"
        )
    return cfg.model_copy(update={"role_swap": not cfg.role_swap})


def replay(record: RunRecord) -> RunRecord:
    """
    Re-run the trial a record describes.
    """
    fresh = run_trial(record.trial)
    return fresh.model_copy(
        update={
            "axis": record.axis,
            "axis_value": record.axis_value,
            "seed_index": record.seed_index,
        }
    )
