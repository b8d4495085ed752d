"""Node-level kernel scheduler: the three-phase adaptive token algorithm."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .model import SchedulerParams, Status
from .monitor import BubbleSignal

CONSERVATIVE = "conservative"
INCREMENTAL = "incremental"
STABLE = "stable"


@dataclass
class SchedulerState:
    params: SchedulerParams
    global_tokens: int = 0
    status: Status = Status.BUSY
    last_decision_time: float = 0.0
    phase: str = CONSERVATIVE

    def __post_init__(self) -> None:
        if not 0 <= self.global_tokens <= self.params.UL:
            raise ValueError("global_tokens must lie in [0, UL]")


@dataclass(frozen=True)
class Decision:
    time: float
    zero_count: int
    phase: str
    global_tokens: int
    per_instance_tokens: int
    status: Status


def decide(state: SchedulerState, signal: BubbleSignal) -> tuple[int, Status]:
    """Advance ``state`` by one bubble signal and return (per-instance grant, status).

    The accumulator is kept before the division by ``m`` so that growth does not
    depend on how many instances share it. A zeroed accumulator restarts from
    ``seed_tokens``; multiplying zero would otherwise never leave zero.
    """
    p = state.params
    z = signal.zero_count
    if z <= p.alpha:
        state.global_tokens = 0
        state.status = Status.BUSY
        state.phase = CONSERVATIVE
        per_instance = 0
    else:
        cap, state.status, state.phase = (
            (p.LL, Status.BUSY, INCREMENTAL) if z <= p.beta else (p.UL, Status.IDLE, STABLE)
        )
        grown = max(state.global_tokens, p.seed_tokens) * p.gamma
        state.global_tokens = int(min(cap, math.floor(grown)))
        per_instance = state.global_tokens // p.m
    state.last_decision_time = signal.emit_time
    return per_instance, state.status


def preempt_busy(now: float, iteration_start: float, period_estimate: float,
                 est_service: float) -> Status:
    """Flip to busy when a request started now would run into resumed training."""
    if now + est_service > iteration_start + period_estimate:
        return Status.BUSY
    return Status.IDLE


class KernelScheduler:
    """Runs :func:`decide` per monitor tick and fans the result out to barriers."""

    def __init__(self, params: SchedulerParams, period_estimate: float = 0.0,
                 est_service: float = 0.0) -> None:
        self.state = SchedulerState(params)
        self.period_estimate = period_estimate
        self.est_service = est_service
        self.iteration_start = 0.0
        self.training_active = True
        self.offline: list[Callable[[int], None]] = []
        self.online: list[Callable[[Status], None]] = []
        self.decisions: list[Decision] = []

    def subscribe_offline(self, grant: Callable[[int], None]) -> None:
        self.offline.append(grant)

    def subscribe_online(self, set_status: Callable[[Status], None]) -> None:
        self.online.append(set_status)

    def iteration_boundary(self, time: float) -> None:
        self.iteration_start = time

    def on_signal(self, signal: BubbleSignal) -> Decision:
        per_instance, status = decide(self.state, signal)
        if status is Status.IDLE and self.training_active and self.est_service > 0:
            status = preempt_busy(signal.emit_time, self.iteration_start,
                                  self.period_estimate, self.est_service)
        d = Decision(signal.emit_time, signal.zero_count, self.state.phase,
                     self.state.global_tokens, per_instance, status)
        self.decisions.append(d)
        self.broadcast(per_instance, status)
        return d

    def broadcast(self, per_instance_tokens: int, status: Status) -> None:
        for grant in self.offline:
            grant(per_instance_tokens)
        for set_status in self.online:
            set_status(status)


def format_decisions(decisions: list[Decision]) -> str:
    lines = ["time_us,z_c,phase,global_tokens,per_instance_tokens,status"]
    for d in decisions:
        lines.append(
            f"{d.time:.3f},{d.zero_count},{d.phase},{d.global_tokens},"
            f"{d.per_instance_tokens},{d.status.value}"
        )
    return "\n".join(lines) + "\n"
