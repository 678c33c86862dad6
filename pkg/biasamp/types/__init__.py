from .._aggregate import EcePoint, SummaryRow, TrajectoryRow
from .._dataset import Example, ExampleSet, NormalizationStats, RawDataset
from .._experiment import DatasetSummary, EpochMetrics, FinalMetrics, TrialData
from .._metrics import (
    AccuracyCell,
    BiasAmpBreakdown,
    BiasAmpCell,
    CalibrationBin,
    CalibrationTable,
    CellRates,
    DisaggregatedAccuracy,
    IntervalSummary,
)
from .._model import Gradients, ModelState
from .._sweep import SweepResult, TrialFailure, TrialSpec
from .._train import TrainResult

__all__ = (
    "AccuracyCell",
    "BiasAmpBreakdown",
    "BiasAmpCell",
    "CalibrationBin",
    "CalibrationTable",
    "CellRates",
    "DatasetSummary",
    "DisaggregatedAccuracy",
    "EcePoint",
    "EpochMetrics",
    "Example",
    "ExampleSet",
    "FinalMetrics",
    "Gradients",
    "IntervalSummary",
    "ModelState",
    "NormalizationStats",
    "RawDataset",
    "SummaryRow",
    "SweepResult",
    "TrainResult",
    "TrajectoryRow",
    "TrialData",
    "TrialFailure",
    "TrialSpec",
)
