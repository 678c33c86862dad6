import pytest
from biasamp import (
    ConfigurationError,
    RunStore,
    SweepGrid,
    apply_axis,
    sweep,
    sweep_async,
)
from biasamp._sweep import axis_value_of, sweep_trials
from pydantic import ValidationError

from .conftest import small_trial


def tiny_trial(**overrides):
    return small_trial(
        dataset={"kind": "synthetic", "synth": {"dimension": 3, "train_size": 60, "test_size": 60}},
        arch={"width": 4},
        train={"epochs": 1},
        **overrides,
    )


def test_apply_axis_revalidates():
    base = small_trial()
    cfg = apply_axis(base, "epsilon", 0.45, seed=3)
    assert cfg.bias.epsilon == 0.45
    assert cfg.seed == 3
    assert cfg.arch == base.arch

    assert apply_axis(base, "depth", 3.0).arch.depth == 3
    assert apply_axis(base, "width", 16).arch.width == 16
    assert apply_axis(base, "weight_decay", 0.01).train.weight_decay == 0.01
    assert apply_axis(base, "train_fraction", 0.25).train_fraction == 0.25
    assert apply_axis(base, "eta", 0.7).dataset.synth.eta == 0.7  # type: ignore[union-attr]

    with pytest.raises(ValidationError, match="epsilon"):
        apply_axis(base, "epsilon", 0.7)


def test_axis_errors():
    linear = small_trial(arch={"family": "linear"})
    with pytest.raises(ConfigurationError, match="linear"):
        apply_axis(linear, "depth", 2)


def test_axis_value_of():
    base = small_trial()
    assert axis_value_of(base, "epsilon") == 0.3
    assert axis_value_of(base, "width") == 8.0
    assert axis_value_of(base, "eta") is None
    assert axis_value_of(small_trial(dataset={"kind": "synthetic", "synth": {"eta": 0.25}}), "eta") == 0.25


def test_sweep_trials_cardinality_and_seeds():
    grid = SweepGrid(axis="epsilon", values=[0.0, 0.15, 0.3, 0.45], seeds=20)
    specs = sweep_trials(grid, small_trial())
    assert len(specs) == 80
    assert len({s.trial.seed for s in specs}) == 80
    assert len({s.trial.key() for s in specs}) == 80
    assert [s.value for s in specs[:20]] == [0.0] * 20
    assert specs[0].trial.bias.epsilon == 0.0
    assert specs[-1].trial.bias.epsilon == 0.45
    # Seeds depend only on the grid point, not on the other values swept
    other = sweep_trials(SweepGrid(axis="epsilon", values=[0.3], seeds=20), small_trial())
    assert [s.trial for s in other] == [s.trial for s in specs[40:60]]


def test_sweep_grid_validation():
    with pytest.raises(ValidationError, match="strictly increasing"):
        SweepGrid(axis="epsilon", values=[0.3, 0.1])
    with pytest.raises(ValidationError, match="integers"):
        SweepGrid(axis="depth", values=[1.5])


def test_sweep_produces_one_record_per_trial():
    grid = SweepGrid(axis="epsilon", values=[0.0, 0.15, 0.3, 0.45], seeds=20)
    result = sweep(grid, tiny_trial())
    assert len(result.records) == 80
    assert result.failures == []
    assert [(r.axis, r.axis_value, r.seed_index) for r in result.records[:2]] == [
        ("epsilon", 0.0, 0),
        ("epsilon", 0.0, 1),
    ]


def test_sweep_is_independent_of_concurrency():
    grid = SweepGrid(axis="weight_decay", values=[0.0, 0.001], seeds=3)
    sequential = sweep(grid, tiny_trial())
    threaded = sweep(grid, tiny_trial(), concurrency=3)
    assert [r.content() for r in threaded.records] == [
        r.content() for r in sequential.records
    ]


def test_sweep_resumes_from_the_store(tmp_path):
    grid = SweepGrid(axis="epsilon", values=[0.1, 0.2], seeds=2)
    store = RunStore(tmp_path)
    first = sweep(grid, tiny_trial(), store=store)
    assert first.skipped == 0
    assert len(store.records()) == 4

    second = sweep(grid, tiny_trial(), store=RunStore(tmp_path))
    assert second.skipped == 4
    assert [r.content() for r in second.records] == [r.content() for r in first.records]
    assert len(store.records()) == 4


def test_store_skips_torn_lines(tmp_path):
    store = RunStore(tmp_path)
    sweep(SweepGrid(axis="epsilon", values=[0.1], seeds=1), tiny_trial(), store=store)
    with open(store.runs_path, "a", encoding="utf-8") as f:
        f.write('{"schema_version": 1, "trial_key": "abc"')
    assert len(store.records()) == 1


def test_store_appends_after_an_unterminated_line(tmp_path):
    store = RunStore(tmp_path)
    store.runs_path.write_text('{"schema_version": 1, "trial_key": "abc"', encoding="utf-8")
    result = sweep(SweepGrid(axis="epsilon", values=[0.1], seeds=1), tiny_trial(), store=store)

    (record,) = store.records()
    assert record.content() == result.records[0].content()
    assert set(store.completed()) == {record.trial_key}


def test_failure_log_appends_after_an_unterminated_line(tmp_path):
    store = RunStore(tmp_path)
    store.failures_path.write_text('{"trial_key": "abc"', encoding="utf-8")
    grid = SweepGrid(axis="train_fraction", values=[0.001], seeds=1)
    result = sweep(grid, tiny_trial(), store=store)

    (entry,) = store.failures()
    assert entry["trial_key"] == result.failures[0].key


def test_failed_trials_are_quarantined(tmp_path):
    # At p = 0.001 every cell of the training split rounds to zero
    grid = SweepGrid(axis="train_fraction", values=[0.001, 1.0], seeds=1)
    store = RunStore(tmp_path)
    result = sweep(grid, tiny_trial(), store=store)

    assert len(result.records) == 1
    assert result.records[0].axis_value == 1.0
    (failure,) = result.failures
    assert failure.error_type == "ValueError"
    assert "empty" in failure.error

    (entry,) = store.failures()
    assert entry["trial_key"] == failure.key
    assert entry["error_type"] == "ValueError"
    assert "Traceback" in entry["traceback"]
    assert entry["trial"]["train_fraction"] == 0.001


def test_sweep_rejects_bad_concurrency():
    with pytest.raises(ConfigurationError):
        sweep(SweepGrid(axis="epsilon", values=[0.1], seeds=1), tiny_trial(), concurrency=0)


@pytest.mark.asyncio
async def test_sweep_async_matches_sweep():
    grid = SweepGrid(axis="epsilon", values=[0.1, 0.3], seeds=2)
    expected = sweep(grid, tiny_trial())
    result = await sweep_async(grid, tiny_trial(), concurrency=2)
    assert [r.content() for r in result.records] == [r.content() for r in expected.records]


def test_sweep_with_live_progress():
    grid = SweepGrid(axis="epsilon", values=[0.2], seeds=2)
    result = sweep(grid, tiny_trial(), progress=True)
    assert len(result.records) == 2


def test_threaded_sweep_with_live_progress():
    grid = SweepGrid(axis="epsilon", values=[0.1, 0.2], seeds=2)
    threaded = sweep(grid, tiny_trial(), concurrency=2, progress=True)
    sequential = sweep(grid, tiny_trial())
    assert [r.content() for r in threaded.records] == [
        r.content() for r in sequential.records
    ]
