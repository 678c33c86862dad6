import struct
from pathlib import Path
from typing import Any

import numpy as np
from biasamp import PredictionRecord, PredictionTable, TrialConfig

FIXTURES = Path(__file__).parent / "fixtures"


def twenty_records(confidence: float = 0.9) -> list[PredictionRecord]:
    """
    Group a: 8 positives (all predicted +) and 2 negatives (one predicted +).
    Group b: 2 positives (one predicted +) and 8 negatives (all predicted -).
    """

    def rec(t: int, pred: int, group: str) -> PredictionRecord:
        return PredictionRecord(
            true_class=t,  # type: ignore[arg-type]
            predicted_class=pred,  # type: ignore[arg-type]
            confidence=confidence,
            group=group,
        )

    return [
        *[rec(1, 1, "a") for _ in range(8)],
        rec(-1, 1, "a"),
        rec(-1, -1, "a"),
        rec(1, 1, "b"),
        rec(1, -1, "b"),
        *[rec(-1, -1, "b") for _ in range(8)],
    ]


def calibration_records() -> list[PredictionRecord]:
    return [
        PredictionRecord(true_class=1, predicted_class=1, confidence=0.9, group="a"),
        PredictionRecord(true_class=-1, predicted_class=-1, confidence=0.9, group="b"),
        PredictionRecord(true_class=1, predicted_class=1, confidence=0.6, group="a"),
        PredictionRecord(true_class=-1, predicted_class=1, confidence=0.6, group="b"),
    ]


def random_table(rng: np.random.Generator, n: int) -> PredictionTable:
    return PredictionTable(
        true_class=rng.choice([-1, 1], size=n),
        predicted_class=rng.choice([-1, 1], size=n),
        confidence=rng.uniform(0.5, 1.0, size=n),
        group=rng.choice(["a", "b"], size=n),
    )


def write_idx(path: Path, magic: int, dims: tuple[int, ...], data: bytes) -> Path:
    header = struct.pack(f">I{len(dims)}I", magic, *dims)
    path.write_bytes(header + data)
    return path


def small_trial(**overrides: Any) -> TrialConfig:
    """
    A synthetic trial small enough to train in well under a second.
    """
    base = {
        "dataset": {
            "kind": "synthetic",
            "synth": {"dimension": 4, "train_size": 200, "test_size": 200},
        },
        "bias": {"epsilon": 0.3},
        "arch": {"family": "mlp", "depth": 1, "width": 8},
        "train": {"epochs": 3, "batch_size": 50, "base_lr": 0.1},
        "seed": 7,
    }
    for key, value in overrides.items():
        # Dataset overrides replace the whole source
        if key != "dataset" and isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return TrialConfig.model_validate(base)
