import logging
from abc import ABC, abstractmethod

from rich.logging import RichHandler
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    TextColumn,
    TimeElapsedColumn,
)

from ._logging import logger


class SweepProgress(ABC):
    @abstractmethod
    def advance(self, description: str = ""):
        pass

    @abstractmethod
    def __enter__(self) -> "SweepProgress":
        pass

    @abstractmethod
    def __exit__(self, exc_type, exc_value, traceback):
        pass


class MockSweepProgress(SweepProgress):
    def advance(self, description: str = ""):
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        pass


class LiveSweepProgress(SweepProgress):
    """
    A rich progress bar counting finished trials.
    """

    def __init__(self, total: int, name: str = "sweep"):
        self.progress = Progress(
            TextColumn("[bold]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            transient=False,
        )
        self._task = self.progress.add_task(name, total=total)

    def advance(self, description: str = ""):
        if description:
            self.progress.update(self._task, advance=1, description=description)
        else:
            self.progress.advance(self._task)

    def __enter__(self):
        self.progress.__enter__()
        # RichHandlers print through their own console unless pointed at the
        # live one; then log lines render above the bar.
        handlers = [*logging.getLogger().handlers, *logger.handlers]
        for h in handlers:
            if isinstance(h, RichHandler):
                h.console = self.progress.console

        return self

    def __exit__(self, exc_type, exc_value, traceback):
        return self.progress.__exit__(exc_type, exc_value, traceback)
