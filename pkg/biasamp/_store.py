from __future__ import annotations

import json
import traceback
from pathlib import Path
from threading import Lock
from typing import TYPE_CHECKING, Any, Union

from pydantic import ValidationError

from ._logging import logger

if TYPE_CHECKING:
    from ._config import TrialConfig
    from ._experiment import RunRecord

RUNS_FILE = "runs.jsonl"
FAILURES_FILE = "failures.jsonl"


class RunStore:
    """
    Append-only JSONL persistence for the records of one sweep.

    Sealed run records go to `runs.jsonl`, one object per line; quarantined
    failures go to `failures.jsonl`. All writes go through one lock, so any
    number of worker threads can share a store.

    Parameters
    ----------
    directory
        The sweep's output directory (created if needed).
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.runs_path = self.directory / RUNS_FILE
        self.failures_path = self.directory / FAILURES_FILE
        self._lock = Lock()

    def append(self, record: "RunRecord") -> None:
        with self._lock:
            _append_line(self.runs_path, record.model_dump_json())

    def append_failure(self, key: str, trial: "TrialConfig", e: BaseException) -> None:
        entry = {
            "trial_key": key,
            "trial": trial.model_dump(mode="json"),
            "error_type": type(e).__name__,
            "error": str(e),
            "traceback": "".join(
                traceback.format_exception(type(e), e, e.__traceback__)
            ),
        }
        with self._lock:
            _append_line(self.failures_path, json.dumps(entry, sort_keys=True))

    def records(self) -> list["RunRecord"]:
        """
        All sealed records, in the order they were appended.

        A line that does not parse (e.g. a write interrupted by a crash) is
        skipped with a warning; it is not a sealed record.
        """
        from ._experiment import RunRecord

        if not self.runs_path.exists():
            return []
        out = []
        with self._lock:
            lines = self.runs_path.read_text(encoding="utf-8").splitlines()
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                out.append(RunRecord.model_validate_json(line))
            except ValidationError:
                logger.warning(
                    f"Ignoring unreadable run record on line {lineno} of {self.runs_path}."
                )
        return out

    def completed(self) -> dict[str, "RunRecord"]:
        """
        Sealed records keyed by their trial key (used to resume a sweep).
        """
        return {r.trial_key: r for r in self.records()}

    def failures(self) -> list[dict[str, Any]]:
        if not self.failures_path.exists():
            return []
        with self._lock:
            lines = self.failures_path.read_text(encoding="utf-8").splitlines()
        out = []
        for line in lines:
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                continue
        return out


def _append_line(path: Path, line: str) -> None:
    with open(path, "a+b") as f:
        # Terminate a torn last line left by a crash
        if f.seek(0, 2) > 0:
            f.seek(-1, 2)
            if f.read(1) != b"\n":
                f.write(b"\n")
        f.write(line.encode("utf-8") + b"\n")
