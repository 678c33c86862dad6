from __future__ import annotations

from ._config import TrainConfig
from ._utils import round_half_up

__all__ = ("effective_epochs", "lr_at", "milestones")


def effective_epochs(cfg: TrainConfig) -> int:
    """
    Number of epochs actually run: `E`, or `round(E / p)` when training on a
    fraction `p` of the data (`epoch_scaling`).
    """
    if cfg.epoch_scaling is None:
        return cfg.epochs
    return max(1, round_half_up(cfg.epochs / cfg.epoch_scaling))


def milestones(cfg: TrainConfig) -> list[int]:
    """
    Epochs after which the learning rate is decayed.

    Each milestone is `round_half_up(fraction * effective_epochs)`, so scaling
    the epoch count keeps the shape of the schedule.
    """
    e = effective_epochs(cfg)
    return [round_half_up(f * e) for f in cfg.decay_milestone_fractions]


def lr_at(cfg: TrainConfig, epoch: int) -> float:
    """
    Learning rate of a (1-based) epoch.

    The first `warmup_epochs` epochs use `warmup_lr`. Afterwards the rate is
    `base_lr / decay_factor**k`, where `k` counts the milestones already
    passed (an epoch is decayed once it comes strictly after a milestone).

    Parameters
    ----------
    cfg
        The training recipe.
    epoch
        An epoch in `[1, effective_epochs(cfg)]`.
    """
    e = effective_epochs(cfg)
    if not (1 <= epoch <= e):
        raise ValueError(f"epoch must lie in [1, {e}], got {epoch}")
    if epoch <= cfg.warmup_epochs:
        return cfg.warmup_lr
    k = sum(1 for m in milestones(cfg) if epoch > m)
    return cfg.base_lr / cfg.decay_factor**k
