import pytest
from biasamp import TrainConfig, effective_epochs, lr_at, milestones
from pydantic import ValidationError


def test_default_milestones():
    assert milestones(TrainConfig(epochs=50)) == [25, 38]
    assert milestones(TrainConfig(epochs=500)) == [250, 375]


def test_lr_follows_step_decay():
    cfg = TrainConfig(epochs=500)
    assert lr_at(cfg, 1) == 0.01
    assert lr_at(cfg, 2) == 0.1
    assert lr_at(cfg, 250) == 0.1
    assert lr_at(cfg, 251) == pytest.approx(0.01)
    assert lr_at(cfg, 300) == pytest.approx(0.01)
    assert lr_at(cfg, 376) == pytest.approx(0.001)
    assert lr_at(cfg, 400) == pytest.approx(0.001)
    assert lr_at(cfg, 500) == cfg.base_lr / cfg.decay_factor**2


def test_lr_is_non_increasing_after_warmup():
    cfg = TrainConfig(epochs=37, decay_milestone_fractions=(0.3, 0.6, 0.9))
    rates = [lr_at(cfg, e) for e in range(2, effective_epochs(cfg) + 1)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_lr_rejects_out_of_range_epochs():
    cfg = TrainConfig(epochs=10)
    with pytest.raises(ValueError, match=r"\[1, 10\]"):
        lr_at(cfg, 0)
    with pytest.raises(ValueError):
        lr_at(cfg, 11)


def test_epoch_scaling_stretches_the_schedule():
    cfg = TrainConfig(epochs=500, epoch_scaling=0.1)
    assert effective_epochs(cfg) == 5000
    assert milestones(cfg) == [2500, 3750]

    assert effective_epochs(TrainConfig(epochs=100, epoch_scaling=0.5)) == 200
    assert effective_epochs(TrainConfig(epochs=1, epoch_scaling=1.0)) == 1


def test_milestone_fractions_are_validated():
    with pytest.raises(ValidationError, match="strictly increasing"):
        TrainConfig(decay_milestone_fractions=(0.75, 0.5))
    with pytest.raises(ValidationError, match="inside"):
        TrainConfig(decay_milestone_fractions=(0.5, 1.0))
    assert milestones(TrainConfig(decay_milestone_fractions=())) == []
