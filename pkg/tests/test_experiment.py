import numpy as np
import pytest
from biasamp import (
    GROUP_B,
    RunRecord,
    UnsupportedOperationError,
    bias_amp,
    build_datasets,
    derive_seed,
    effective_epochs,
    load_checkpoint,
    predict,
    probe_group_recognizability,
    replay,
    run_trial,
    swap_roles,
)

from .conftest import small_trial, write_idx


def idx_source(tmp_path, n: int = 80, k: int = 4) -> dict:
    rng = np.random.default_rng(0)
    paths = {}
    for split in ("train", "test"):
        images = rng.integers(0, 256, size=(n, 6, 6), dtype=np.uint8)
        labels = (np.arange(n) % k).astype(np.uint8)
        paths[split] = [
            str(write_idx(tmp_path / f"{split}-images-idx3-ubyte", 0x803, images.shape, images.tobytes())),
            str(write_idx(tmp_path / f"{split}-labels-idx1-ubyte", 0x801, labels.shape, labels.tobytes())),
        ]
    return {"kind": "ingested", "format": "idx", **paths}


def test_run_trial_record():
    cfg = small_trial()
    record = run_trial(cfg)

    assert record.trial_key == cfg.key()
    assert len(record.trajectory) == 3
    assert [m.epoch for m in record.trajectory] == [1, 2, 3]
    last = record.trajectory[-1]
    assert record.final.bias_amp == last.bias_amp
    assert record.final.acc == last.acc
    assert record.final.ece == last.ece
    assert record.final.acc_cells == last.acc_cells
    assert set(record.final.delta) == {"+1/a", "-1/a", "+1/b", "-1/b"}

    assert record.dataset.source == "synthetic"
    assert record.dataset.train_size == 200
    assert record.dataset.normalization is None
    assert record.substreams["init_model"] == derive_seed("init_model", 7)
    epoch_streams = {k: v for k, v in record.substreams.items() if k.startswith("train_epoch/")}
    assert epoch_streams == {f"train_epoch/{e}": derive_seed("train_epoch", 7, e) for e in (1, 2, 3)}
    assert record.probe_accuracy is None
    assert record.warnings == []
    assert record.wall_time > 0


def test_run_trial_is_deterministic():
    cfg = small_trial()
    first = run_trial(cfg)
    assert run_trial(cfg).content() == first.content()
    assert replay(first).content() == first.content()


def test_run_record_json_round_trip():
    record = run_trial(small_trial(train={"epochs": 1}))
    back = RunRecord.model_validate_json(record.model_dump_json())
    assert back.content() == record.content()
    assert back.wall_time == record.wall_time


def test_subsampled_trials_scale_their_epochs():
    cfg = small_trial(train_fraction=0.5, train={"epochs": 2})
    record = run_trial(cfg)
    assert len(record.trajectory) == 4
    assert record.dataset.train_size == pytest.approx(100, abs=2)

    assert effective_epochs(small_trial(train_fraction=0.5, train={"epochs": 100}).train_recipe) == 200
    pinned = small_trial(train_fraction=0.5, train={"epochs": 2, "epoch_scaling": 1.0})
    assert effective_epochs(pinned.train_recipe) == 2


def test_subsample_notes_become_record_warnings():
    record = run_trial(small_trial(bias={"epsilon": 0.45}, train_fraction=0.05))
    assert any("rounds to zero" in w for w in record.warnings)


def test_checkpoint_reproduces_final_metrics(tmp_path):
    cfg = small_trial()
    path = tmp_path / "model.ckpt"
    record = run_trial(cfg, checkpoint_path=path)

    state = load_checkpoint(path)
    assert state.epoch == 3
    preds = predict(state, build_datasets(cfg).test)
    assert bias_amp(preds).value == record.final.bias_amp


def test_swap_roles_relabels_the_same_examples():
    cfg = small_trial()
    swapped_cfg = swap_roles(cfg)
    assert swapped_cfg.role_swap
    assert swap_roles(swapped_cfg) == cfg

    data = build_datasets(cfg)
    swapped = build_datasets(swapped_cfg)
    np.testing.assert_array_equal(swapped.train.features, data.train.features)
    np.testing.assert_array_equal(
        swapped.train.class_labels, np.where(data.train.group_labels == GROUP_B, 1, -1)
    )
    np.testing.assert_array_equal(
        swapped.test.group_labels, np.where(data.test.class_labels == 1, GROUP_B, 0)
    )


def test_swap_roles_rejects_mixing():
    cfg = small_trial(bias={"epsilon": 0.3, "convention": "mixing"})
    with pytest.raises(UnsupportedOperationError):
        swap_roles(cfg)


def test_probe_recognizes_an_obvious_group():
    cfg = small_trial(
        dataset={
            "kind": "synthetic",
            "synth": {"dimension": 2, "noise_sigma": 0.0, "train_size": 200, "test_size": 200},
        },
        arch={"family": "linear"},
        train={
            "epochs": 20,
            "warmup_epochs": 0,
            "decay_milestone_fractions": [],
            "weight_decay": 0.0,
        },
    )
    data = build_datasets(cfg)
    acc = probe_group_recognizability((data.train, data.test), cfg.arch, cfg.train_recipe, cfg.seed)
    assert acc == 1.0


def test_probe_is_near_chance_without_group_signal():
    cfg = small_trial(
        dataset={
            "kind": "synthetic",
            "synth": {"dimension": 4, "group_margin": 0.0, "train_size": 2000, "test_size": 2000},
        },
        bias={"epsilon": 0.0},
        arch={"family": "linear"},
    )
    data = build_datasets(cfg)
    acc = probe_group_recognizability((data.train, data.test), cfg.arch, cfg.train_recipe, cfg.seed)
    assert 0.45 <= acc <= 0.55


def test_run_trial_records_probe_accuracy():
    record = run_trial(small_trial(probe=True, train={"epochs": 1}))
    assert record.probe_accuracy is not None
    assert 0.0 <= record.probe_accuracy <= 1.0
    assert "probe" in record.substreams


def test_inversion_trial_on_ingested_images(tmp_path):
    cfg = small_trial(dataset=idx_source(tmp_path), arch={"width": 4}, train={"epochs": 1})
    data = build_datasets(cfg)
    assert data.train.feature_shape == (1, 6, 6)
    assert data.normalization is not None
    assert abs(float(data.train.features.mean())) < 1.0

    record = run_trial(cfg)
    assert record.dataset.source == "ingested"
    assert record.dataset.test_size == 80
    assert record.dataset.normalization is not None
    assert "binarize_labels" in record.substreams


def test_mixing_trial_on_ingested_images(tmp_path):
    cfg = small_trial(
        dataset=idx_source(tmp_path),
        bias={"epsilon": 0.3, "convention": "mixing"},
        mix={"eta": 0.5, "group_class_ids": [0, 1], "task_class_ids": [2, 3]},
        train={"epochs": 1},
    )
    record = run_trial(cfg)
    assert record.dataset.train_size == 40
    assert "mix_group_images/train" in record.substreams
