from __future__ import annotations

import logging
import os
import warnings
from typing import TYPE_CHECKING

from rich.logging import RichHandler

if TYPE_CHECKING:
    from ._config import TrialConfig


def _rich_handler() -> RichHandler:
    formatter = logging.Formatter("%(name)s - %(message)s")
    handler = RichHandler()
    handler.setFormatter(formatter)
    return handler


logger = logging.getLogger("biasamp")


def _install_rich_handler(level: int) -> None:
    logger.setLevel(level)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        logger.addHandler(_rich_handler())
    logger.propagate = False

    # Add a RichHandler to the root logger if there are no handlers, so that
    # warnings from numpy/scipy land in the same console as ours.
    root = logging.getLogger()
    if not root.handlers:
        root.addHandler(_rich_handler())

    bad_handlers = [
        h.get_name() for h in root.handlers if not isinstance(h, RichHandler)
    ]
    if len(bad_handlers) > 0:
        warnings.warn(
            "When setting up logging handlers for BIASAMP_LOG, biasamp detected "
            f"non-rich handler(s) on the root logger named {bad_handlers}. "
            "Log lines handled by those handlers may be garbled while a sweep "
            "progress bar is displayed. Import `biasamp` before other libraries "
            "that set up logging, or add a RichHandler to the root logger.",
        )


_env_level = os.environ.get("BIASAMP_LOG", "").lower()
if _env_level in ("info", "debug"):
    _install_rich_handler(logging.DEBUG if _env_level == "debug" else logging.INFO)


def configure_logging(verbosity: int) -> None:
    """
    Attach rich logging for the command-line interface.

    Parameters
    ----------
    verbosity
        0 keeps warnings only, 1 shows info, 2 or more shows debug output.
    """
    if verbosity <= 0:
        logger.setLevel(logging.WARNING)
        return
    _install_rich_handler(logging.DEBUG if verbosity >= 2 else logging.INFO)


def log_trial_start(key: str, cfg: "TrialConfig") -> None:
    logger.info(
        f"Starting trial {key[:12]} (seed={cfg.seed}, epsilon={cfg.bias.epsilon}, "
        f"train_fraction={cfg.train_fraction}, role_swap={cfg.role_swap})."
    )


def log_trial_done(key: str, bias_amp: float, acc: float, seconds: float) -> None:
    logger.info(
        f"Finished trial {key[:12]} in {seconds:.1f}s: "
        f"bias_amp={bias_amp:.6f}, acc={acc:.6f}."
    )


def log_epoch(epoch: int, lr: float, bias_amp: float, acc: float) -> None:
    logger.debug(
        f"epoch {epoch}: lr={lr:g}, bias_amp={bias_amp:.6f}, acc={acc:.6f}"
    )


def log_trial_skipped(key: str) -> None:
    logger.info(f"Skipping trial {key[:12]}; a sealed record already exists.")


def log_trial_failure(key: str, e: BaseException) -> None:
    logger.warning(
        f"Trial {key[:12]} failed and was quarantined. "
        f"The error message is: '{e}'",
    )
