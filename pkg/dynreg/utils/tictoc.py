"""dynreg/dynreg/utils/tictoc.py.

Timer that tics, tocs and logs.
"""

import time

from dynreg.utils import log


class Tic:
    """Lap timer. `toc` stores the lap since the last call and logs it.

    Parameters
    -----------
    name: str
    log_: bool
      Default is True. If False, laps are only stored.
    """

    __slots__ = ("name", "log", "laps", "_start", "_last")

    def __init__(self, name="tic", log_=True):
        self.name = name
        self.log = log_
        self.laps = list()
        self._start = time.perf_counter()
        self._last = self._start

    def toc(self, label=""):
        """Stores and returns the time since the previous toc."""
        now = time.perf_counter()
        lap = now - self._last
        self._last = now
        self.laps.append((label, lap))
        if self.log:
            log.info(self.name, "-", label, f"{lap:.3f}s")

        return lap

    def total(self):
        """Seconds since construction."""
        return time.perf_counter() - self._start

    def summary(self):
        """Logs every stored lap and the total."""
        for label, lap in self.laps:
            log.info(self.name, "-", label, f"{lap:.3f}s")
        log.info(self.name, "- total", f"{self.total():.3f}s")
