"""Kernel barriers that gate inference instances.

Offline instances spend per-period token grants. Online instances pull one
request at a time whenever the scheduler reports the GPU idle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from .model import InferenceRequest, KernelOp, Status

FORWARD = "forward"
BLOCK = "block"
PULL = "pull"
COMPLETE = "complete"


@dataclass(frozen=True)
class GateRecord:
    time: float
    instance: str
    action: str
    request_id: int
    kernel_index: int
    tokens_spent: int


@dataclass(frozen=True)
class PeriodSpend:
    time: float
    budget: int
    spent: int


class GateLog:
    def __init__(self) -> None:
        self.records: list[GateRecord] = []

    def add(self, *args) -> None:
        self.records.append(GateRecord(*args))

    def format(self) -> str:
        lines = ["time_us,instance,action,request_id,kernel_index,tokens_spent"]
        for r in self.records:
            lines.append(
                f"{r.time:.3f},{r.instance},{r.action},{r.request_id},"
                f"{r.kernel_index},{r.tokens_spent}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class _Pending:
    kernel: KernelOp
    request_id: int
    kernel_index: int


class OfflineBarrier:
    """FIFO token gate for one offline inference instance.

    ``budget=None`` turns the gate into a pass-through (used by the
    uncoordinated baselines). Budgets do not carry over between periods.
    """

    def __init__(self, instance: str, forward: Callable[[KernelOp, int, int], None],
                 clock: Callable[[], float] = lambda: 0.0, budget: int | None = 0,
                 log: GateLog | None = None) -> None:
        self.instance = instance
        self._forward = forward
        self._clock = clock
        self.budget = budget
        self.spent_this_period = 0
        self.queue: deque[_Pending] = deque()
        self.log = log
        self.periods: list[PeriodSpend] = []
        self._period_start = 0.0
        self._blocked_head: int | None = None

    @property
    def gated(self) -> bool:
        return self.budget is not None

    def _close_period(self) -> None:
        if self.gated:
            self.periods.append(PeriodSpend(self._period_start, self.budget, self.spent_this_period))

    def grant(self, budget: int) -> None:
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self._close_period()
        self.budget = budget
        self.spent_this_period = 0
        self._period_start = self._clock()
        self.release()

    def submit(self, kernel: KernelOp, request_id: int = -1, kernel_index: int = -1) -> None:
        self.queue.append(_Pending(kernel, request_id, kernel_index))
        self.release()

    def forward_offline(self) -> str:
        """Try to forward the queue head; returns ``forward`` or ``block``."""
        head = self.queue[0]
        cost = head.kernel.size_tokens
        if self.gated and self.spent_this_period + cost > self.budget:
            if self.log is not None and self._blocked_head != id(head):
                self.log.add(self._clock(), self.instance, BLOCK, head.request_id,
                             head.kernel_index, self.spent_this_period)
            self._blocked_head = id(head)
            return BLOCK
        self.queue.popleft()
        self._blocked_head = None
        if self.gated:
            self.spent_this_period += cost
        if self.log is not None:
            self.log.add(self._clock(), self.instance, FORWARD, head.request_id,
                         head.kernel_index, self.spent_this_period)
        self._forward(head.kernel, head.request_id, head.kernel_index)
        return FORWARD

    def release(self) -> int:
        """Forward queued kernels in order while the budget allows; no skipping."""
        n = 0
        while self.queue and self.forward_offline() == FORWARD:
            n += 1
        return n

    def finish(self) -> list[PeriodSpend]:
        self._close_period()
        self._period_start = self._clock()
        return self.periods


class OnlineGate:
    """Pull-and-execute gate: at most one request in flight, pulled only when idle."""

    def __init__(self, instance: str, status: Status = Status.BUSY,
                 log: GateLog | None = None, clock: Callable[[], float] = lambda: 0.0) -> None:
        self.instance = instance
        self.status = status
        self.in_flight: InferenceRequest | None = None
        self.log = log
        self._clock = clock

    def pull_online(self, queue: deque[InferenceRequest]) -> InferenceRequest | None:
        if self.status is not Status.IDLE or self.in_flight is not None or not queue:
            return None
        req = queue.popleft()
        self.in_flight = req
        if self.log is not None:
            self.log.add(self._clock(), self.instance, PULL, req.id, -1, 0)
        return req

    def complete(self, time: float) -> InferenceRequest:
        req = self.in_flight
        if req is None:
            raise RuntimeError(f"{self.instance}: nothing in flight")
        req.complete(time)
        self.in_flight = None
        if self.log is not None:
            self.log.add(time, self.instance, COMPLETE, req.id, len(req.kernels) - 1, 0)
        return req
