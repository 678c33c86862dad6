from . import types
from ._aggregate import SweepSummary, aggregate
from ._augment import augment
from ._config import (
    ArchConfig,
    BiasConfig,
    ExperimentConfig,
    IngestedSource,
    MixConfig,
    SweepGrid,
    SynthConfig,
    SyntheticSource,
    TrainConfig,
    TrialConfig,
)
from ._dataset import GROUP_A, GROUP_B
from ._errors import (
    ConfigurationError,
    FormatError,
    MetricError,
    ShapeError,
    TrainingDivergedError,
    UnsupportedOperationError,
)
from ._experiment import (
    RunRecord,
    build_datasets,
    probe_group_recognizability,
    replay,
    run_trial,
    swap_roles,
)
from ._ingest import ingest, load_examples, load_raw, save_examples, save_raw
from ._metrics import (
    accuracy,
    bias_amp,
    conditional_rates,
    confidence_interval,
    direction_y,
    disaggregated_accuracy,
    ece,
    spearman,
)
from ._model import (
    forward,
    init_model,
    load_checkpoint,
    loss_and_grad,
    parameter_count,
    save_checkpoint,
    sgd_step,
)
from ._random import derive_seed, rng_for
from ._report import emit_report
from ._schedule import effective_epochs, lr_at, milestones
from ._store import RunStore
from ._sweep import apply_axis, sweep, sweep_async
from ._synth import synth_generate
from ._train import PredictionRecord, PredictionTable, load_predictions, predict, train
from ._transforms import (
    assign_groups,
    binarize_labels,
    build_inversion_examples,
    build_mixed_examples,
    compute_normalization,
    invert_image,
    mix_images,
    relabel_swap_roles,
    stratified_subsample,
)
from ._version import __version__

__all__ = (
    "__version__",
    "ArchConfig",
    "BiasConfig",
    "ExperimentConfig",
    "IngestedSource",
    "MixConfig",
    "SweepGrid",
    "SynthConfig",
    "SyntheticSource",
    "TrainConfig",
    "TrialConfig",
    "GROUP_A",
    "GROUP_B",
    "ConfigurationError",
    "FormatError",
    "MetricError",
    "ShapeError",
    "TrainingDivergedError",
    "UnsupportedOperationError",
    "ingest",
    "load_raw",
    "save_raw",
    "load_examples",
    "save_examples",
    "binarize_labels",
    "assign_groups",
    "invert_image",
    "mix_images",
    "stratified_subsample",
    "compute_normalization",
    "build_inversion_examples",
    "build_mixed_examples",
    "relabel_swap_roles",
    "synth_generate",
    "derive_seed",
    "rng_for",
    "init_model",
    "forward",
    "loss_and_grad",
    "sgd_step",
    "parameter_count",
    "save_checkpoint",
    "load_checkpoint",
    "lr_at",
    "milestones",
    "effective_epochs",
    "augment",
    "train",
    "predict",
    "PredictionRecord",
    "PredictionTable",
    "load_predictions",
    "conditional_rates",
    "direction_y",
    "bias_amp",
    "ece",
    "disaggregated_accuracy",
    "accuracy",
    "confidence_interval",
    "spearman",
    "RunRecord",
    "run_trial",
    "build_datasets",
    "swap_roles",
    "probe_group_recognizability",
    "replay",
    "sweep",
    "sweep_async",
    "apply_axis",
    "RunStore",
    "SweepSummary",
    "aggregate",
    "emit_report",
    "types",
)
