"""
Desk-scale reproductions of how bias amplification behaves as the dataset
bias, the relative difficulty of group and class, and training time vary.
"""

import pytest
from biasamp import SweepGrid, TrialConfig, aggregate, spearman, sweep

pytestmark = pytest.mark.slow


def base_trial(epsilon: float = 0.0, role_swap: bool = False, **synth) -> TrialConfig:
    return TrialConfig.model_validate(
        {
            "dataset": {
                "kind": "synthetic",
                "synth": {
                    "dimension": 20,
                    "class_margin": 1.0,
                    "group_margin": 3.0,
                    "noise_sigma": 1.0,
                    "train_size": 5000,
                    "test_size": 5000,
                    **synth,
                },
            },
            "bias": {"epsilon": epsilon},
            "arch": {"family": "mlp", "depth": 2, "width": 32},
            "train": {"epochs": 30},
            "role_swap": role_swap,
            "seed": 0,
        }
    )


def bias_amp_at(summary, epoch: int) -> float:
    (row,) = [r for r in summary.trajectory if r.epoch == epoch and r.metric == "bias_amp"]
    return row.interval.mean


def test_amplification_grows_with_dataset_bias():
    grid = SweepGrid(axis="epsilon", values=[0.0, 0.15, 0.3], seeds=20)
    result = sweep(grid, base_trial())
    assert not result.failures
    summary = aggregate(result.records, "epsilon")

    unbiased = summary.row(0.0, "bias_amp")
    mild = summary.row(0.15, "bias_amp")
    strong = summary.row(0.3, "bias_amp")
    assert strong.mean > mild.mean > unbiased.mean
    assert abs(unbiased.mean) <= 0.02
    assert unbiased.contains(0.0)
    assert not strong.contains(0.0)


def test_fully_biased_data_cannot_be_amplified():
    grid = SweepGrid(axis="epsilon", values=[0.5], seeds=20)
    summary = aggregate(sweep(grid, base_trial(group_noise_sigma=0.05)).records, "epsilon")
    assert abs(summary.row(0.5, "bias_amp").mean) <= 0.02


def test_amplification_peaks_early_when_the_group_is_easier():
    grid = SweepGrid(axis="epsilon", values=[0.3], seeds=10)
    summary = aggregate(sweep(grid, base_trial(0.3)).records, "epsilon")
    assert bias_amp_at(summary, 1) > bias_amp_at(summary, 30)

    swapped = aggregate(sweep(grid, base_trial(0.3, role_swap=True)).records, "epsilon")
    assert bias_amp_at(swapped, 1) < 0
    assert bias_amp_at(swapped, 1) < bias_amp_at(summary, 1)


def test_amplification_rises_as_the_group_gets_easier():
    grid = SweepGrid(axis="eta", values=[0.1, 0.3, 0.5, 0.7, 0.9], seeds=10)
    summary = aggregate(sweep(grid, base_trial(0.3, eta=0.5)).records, "eta")
    means = [summary.row(v, "bias_amp").mean for v in grid.values]
    assert spearman(grid.values, means) > 0
