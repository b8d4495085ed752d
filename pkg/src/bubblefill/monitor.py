"""Per-training-instance launch counter that reports consecutive idle periods."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .model import MS


@dataclass(frozen=True)
class MonitorConfig:
    period: int = 2 * MS
    window_len: int = 64

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise ValueError("period must be > 0")
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")


@dataclass(frozen=True)
class BubbleSignal:
    zero_count: int
    emit_time: float


class BubbleMonitor:
    """Counts kernel launches per fixed period.

    Periods are half-open ``[k*period, (k+1)*period)``, so a launch that lands
    exactly on a boundary belongs to the period that starts there. The
    zero-count is a running counter and is deliberately not bounded by the
    window, which only keeps recent counts for reporting.
    """

    def __init__(self, instance: str, config: MonitorConfig | None = None) -> None:
        self.instance = instance
        self.config = config or MonitorConfig()
        self.window: deque[tuple[int, int]] = deque(maxlen=self.config.window_len)
        self.zero_count = 0
        self._counts: dict[int, int] = {}
        self._next_period = 0

    def period_of(self, time: float) -> int:
        return int(time // self.config.period)

    def record_launch(self, time: float) -> None:
        k = self.period_of(time)
        if k < self._next_period:
            raise ValueError(f"launch at {time} falls in an already closed period")
        self._counts[k] = self._counts.get(k, 0) + 1

    def close_period(self) -> int:
        """Close the oldest open period and update the zero-count."""
        k = self._next_period
        count = self._counts.pop(k, 0)
        self._next_period = k + 1
        self.zero_count = self.zero_count + 1 if count == 0 else 0
        self.window.append((k, count))
        return count

    def tick(self, time: float) -> BubbleSignal:
        """Close every period that ended at or before ``time`` and emit Z_c."""
        closable = self.period_of(time)
        if closable <= self._next_period:
            raise ValueError(f"tick at {time} closes no period")
        while self._next_period < closable:
            self.close_period()
        return BubbleSignal(self.zero_count, time)

    def snapshot(self) -> list[tuple[int, int]]:
        return list(self.window)
