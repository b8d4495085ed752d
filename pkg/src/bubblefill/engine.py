"""Deterministic discrete-event engine and fair-share GPU model.

The clock is a float in microseconds. Scenario inputs are integer
microseconds, but fair-share completions land on rational instants, so the
engine keeps them exact in floating point rather than rounding.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable

from .model import GpuSpec, KernelOp

EVENT_KINDS = (
    "kernel_start",
    "kernel_end",
    "monitor_tick",
    "request_arrival",
    "scheduler_decision",
    "iteration_boundary",
    "timer",
)

# Remaining nominal work below this is treated as finished.
_EPS = 1e-6


_KINDS = frozenset(EVENT_KINDS)


class Event:
    """One scheduled occurrence. ``action`` runs when the clock reaches ``time``."""

    __slots__ = ("time", "kind", "gpu", "instance", "detail", "action", "seq", "cancelled")

    def __init__(self, time: float, kind: str, gpu: int = -1, instance: str = "",
                 detail: str = "", action: Callable[["Event"], None] | None = None) -> None:
        if kind not in _KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        self.time = time
        self.kind = kind
        self.gpu = gpu
        self.instance = instance
        self.detail = detail
        self.action = action
        self.seq = -1
        self.cancelled = False

    def __repr__(self) -> str:
        return f"Event({self.time!r}, {self.kind!r}, gpu={self.gpu}, instance={self.instance!r})"


LogRecord = tuple[float, str, int, str, str]


class Engine:
    """Virtual clock plus a (time, sequence) ordered event heap."""

    def __init__(self, record: bool = True) -> None:
        self.now: float = 0.0
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = itertools.count()
        self._stopped = False
        self.record = record
        self.log: list[LogRecord] = []

    def schedule(self, event: Event) -> Event:
        if event.time < self.now:
            raise ValueError(f"event at {event.time} is before clock {self.now}")
        event.seq = next(self._seq)
        heapq.heappush(self._heap, (event.time, event.seq, event))
        return event

    def at(self, time: float, kind: str, action=None, **kw) -> Event:
        return self.schedule(Event(time, kind, action=action, **kw))

    def note(self, kind: str, gpu: int = -1, instance: str = "", detail: str = "") -> None:
        """Log an instantaneous occurrence that does not go through the heap."""
        if self.record:
            self.log.append((self.now, kind, gpu, instance, detail))

    def stop(self) -> None:
        self._stopped = True

    @property
    def pending(self) -> int:
        return sum(1 for _, _, ev in self._heap if not ev.cancelled)

    def run(self, until: float | None = None) -> list[LogRecord]:
        heap = self._heap
        while heap and not self._stopped:
            time, _, ev = heap[0]
            if until is not None and time > until:
                break
            heapq.heappop(heap)
            if ev.cancelled:
                continue
            self.now = time
            if self.record:
                self.log.append((time, ev.kind, ev.gpu, ev.instance, ev.detail))
            if ev.action is not None:
                ev.action(ev)
        if until is not None and not self._stopped and self.now < until:
            self.now = float(until)
        return self.log


def format_log(records: Iterable[LogRecord]) -> str:
    lines = ["time_us,kind,gpu,instance,detail"]
    for t, kind, gpu, inst, detail in records:
        lines.append(f"{t:.3f},{kind},{gpu},{inst},{detail}")
    return "\n".join(lines) + "\n"


@dataclass
class _Running:
    kernel: KernelOp
    owner: str
    remaining: float
    on_done: Callable[[int], None] | None
    start: float


class Gpu:
    """A simulated GPU whose running kernels share a scalar compute capacity.

    With total demand D, every running kernel progresses at min(1, 1/D) of its
    nominal rate. Completion instants are recomputed exactly whenever the
    running set changes.
    """

    def __init__(self, engine: Engine, index: int = 0, spec: GpuSpec | None = None) -> None:
        self.engine = engine
        self.index = index
        self.spec = spec or GpuSpec()
        self.running: dict[int, _Running] = {}
        self.memory_used = 0
        self.tenants: dict[str, int] = {}
        self._handles = itertools.count()
        self._last = 0.0
        self._demand = 0.0
        self._busy = 0.0  # integral of min(1, D) dt
        self.work_done = 0.0  # sum of demand x nominal progress
        self.finished: dict[int, tuple[str, KernelOp, float, float]] = {}
        self.keep_history = False
        self._next: Event | None = None
        self._util_mark = 0.0
        self._util_mark_t = 0.0
        self.utilization_log: list[tuple[float, float, float]] = []

    # -- admission ---------------------------------------------------------

    def admit(self, instance: str, memory_peak: int) -> None:
        if self.memory_used + memory_peak > self.spec.memory_capacity:
            raise MemoryError(
                f"gpu {self.index}: admitting {instance} exceeds memory capacity"
            )
        self.tenants[instance] = memory_peak
        self.memory_used += memory_peak

    # -- fair-share core ---------------------------------------------------

    @property
    def rate(self) -> float:
        return 1.0 if self._demand <= 1.0 else 1.0 / self._demand

    @property
    def demand(self) -> float:
        return self._demand

    def _refresh_demand(self) -> None:
        # summed afresh so removals never leave float residue behind
        self._demand = sum(rec.kernel.compute_demand for rec in self.running.values())

    def _advance(self, now: float) -> None:
        dt = now - self._last
        if dt > 0:
            if self.running:
                r = self.rate
                step = r * dt
                for rec in self.running.values():
                    rec.remaining -= step
                self.work_done += self._demand * step
                self._busy += min(1.0, self._demand) * dt
            self._last = now

    def busy_time(self, now: float | None = None) -> float:
        now = self.engine.now if now is None else now
        return self._busy + min(1.0, self._demand) * max(0.0, now - self._last)

    def _reschedule(self) -> None:
        nxt = self._next
        if not self.running:
            if nxt is not None:
                nxt.cancelled = True
                self._next = None
            return
        r = self.rate
        if len(self.running) == 1:
            handle, rec = next(iter(self.running.items()))
        else:
            handle, rec = min(self.running.items(), key=lambda kv: (kv[1].remaining, kv[0]))
        when = self.engine.now + max(rec.remaining, 0.0) / r
        if nxt is not None:
            if nxt.time == when and nxt.detail == f"k{handle}":
                return
            nxt.cancelled = True
        self._next = self.engine.at(
            when, "kernel_end", self._on_completion, gpu=self.index,
            instance=rec.owner, detail=f"k{handle}",
        )

    def launch_kernel(self, owner: str, kernel: KernelOp,
                      on_done: Callable[[int], None] | None = None) -> int:
        now = self.engine.now
        self._advance(now)
        handle = next(self._handles)
        self.running[handle] = _Running(kernel, owner, float(kernel.nominal_duration), on_done, now)
        self._refresh_demand()
        self.engine.note("kernel_start", self.index, owner, f"k{handle}")
        self._reschedule()
        return handle

    def _on_completion(self, ev: Event) -> None:
        self._next = None
        now = self.engine.now
        self._advance(now)
        head = int(ev.detail[1:])
        # the scheduled kernel always finishes here, even if float drift left a sliver
        if len(self.running) == 1:
            done = [head]
        else:
            done = sorted(h for h, rec in self.running.items() if rec.remaining <= _EPS or h == head)
        callbacks = []
        for h in done:
            rec = self.running.pop(h)
            if self.keep_history:
                self.finished[h] = (rec.owner, rec.kernel, rec.start, now)
            if h != head:
                self.engine.note("kernel_end", self.index, rec.owner, f"k{h}")
            if rec.on_done is not None:
                callbacks.append((rec.on_done, h))
        self._refresh_demand()
        self._reschedule()
        for cb, h in callbacks:
            cb(h)

    # -- utilization sampling ---------------------------------------------

    def sample_utilization(self) -> float:
        """Close the current sampling window and log its mean busy fraction."""
        now = self.engine.now
        busy = self.busy_time(now)
        width = now - self._util_mark_t
        if width <= 0:
            return 0.0
        frac = (busy - self._util_mark) / width
        self.utilization_log.append((now, frac, width))
        self._util_mark = busy
        self._util_mark_t = now
        return frac
