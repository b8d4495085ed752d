"""Shared domain vocabulary: kernels, traces, instances, requests, scheduler knobs.

All durations are integer microseconds and all memory sizes are bytes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

TOKEN_UNIT_US = 100
GIB = 1 << 30
MS = 1_000
SECOND = 1_000_000


class Status(str, enum.Enum):
    BUSY = "busy"
    IDLE = "idle"


class Mode(str, enum.Enum):
    DP = "DP"
    MP = "MP"
    PP = "PP"


class InstanceKind(str, enum.Enum):
    TRAINING = "training"
    OFFLINE = "offline_inference"
    ONLINE = "online_inference"


class RequestClass(str, enum.Enum):
    ONLINE = "online"
    OFFLINE = "offline"


def token_size_of(duration_us: float) -> int:
    """Token units charged for a kernel of the given nominal duration.

    One token covers 100 us of nominal kernel time; partial units round up.
    """
    if duration_us <= 0:
        raise ValueError(f"duration must be positive, got {duration_us}")
    return max(1, math.ceil(duration_us / TOKEN_UNIT_US))


@dataclass(frozen=True)
class KernelOp:
    nominal_duration: int
    compute_demand: float
    size_tokens: int = -1

    def __post_init__(self) -> None:
        if self.nominal_duration <= 0:
            raise ValueError("nominal_duration must be > 0")
        if not 0.0 < self.compute_demand <= 1.0:
            raise ValueError("compute_demand must be in (0, 1]")
        expected = token_size_of(self.nominal_duration)
        if self.size_tokens == -1:
            object.__setattr__(self, "size_tokens", expected)
        elif self.size_tokens != expected:
            raise ValueError(
                f"size_tokens {self.size_tokens} inconsistent with duration "
                f"{self.nominal_duration} us (expected {expected})"
            )


@dataclass(frozen=True)
class Segment:
    kind: str  # "compute" | "bubble"
    duration: int
    kernel: KernelOp | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("compute", "bubble"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.duration <= 0:
            raise ValueError("segment duration must be > 0")
        if self.kind == "compute" and self.kernel is None:
            raise ValueError("compute segment needs a kernel template")
        if self.kind == "bubble" and self.kernel is not None:
            raise ValueError("bubble segment cannot carry a kernel template")


@dataclass(frozen=True)
class TrainingTrace:
    mode: Mode
    iteration_period: int
    segments: tuple[Segment, ...]
    total_iterations: int
    memory_peak: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.iteration_period <= 0:
            raise ValueError("iteration_period must be > 0")
        if sum(s.duration for s in self.segments) != self.iteration_period:
            raise ValueError("segment durations must sum to iteration_period")
        if not any(s.kind == "bubble" for s in self.segments):
            raise ValueError("trace needs at least one bubble segment")
        if not any(s.kind == "compute" for s in self.segments):
            raise ValueError("trace needs at least one compute segment")
        if self.total_iterations < 1:
            raise ValueError("total_iterations must be >= 1")
        if self.memory_peak <= 0:
            raise ValueError("memory_peak must be > 0")

    @property
    def bubbles(self) -> list[int]:
        return [s.duration for s in self.segments if s.kind == "bubble"]

    @property
    def max_bubble(self) -> int:
        return max(self.bubbles)

    @property
    def compute_time(self) -> int:
        return self.iteration_period - sum(self.bubbles)


def bubble_fraction(trace: TrainingTrace) -> float:
    return sum(trace.bubbles) / trace.iteration_period


@dataclass(frozen=True)
class InstanceSpec:
    id: str
    kind: InstanceKind
    memory_peak: int
    min_service_time: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", InstanceKind(self.kind))
        if self.memory_peak <= 0:
            raise ValueError("memory_peak must be > 0")
        if self.kind is InstanceKind.ONLINE and self.min_service_time <= 0:
            raise ValueError("online instances need min_service_time > 0")


@dataclass(frozen=True)
class GpuSpec:
    memory_capacity: int = 40 * GIB
    compute_capacity: float = 1.0

    def __post_init__(self) -> None:
        if self.memory_capacity <= 0:
            raise ValueError("memory_capacity must be > 0")


@dataclass
class InferenceRequest:
    id: int
    arrival_time: float
    kernels: tuple[KernelOp, ...]
    request_class: RequestClass
    completion_time: float | None = None

    def __post_init__(self) -> None:
        self.kernels = tuple(self.kernels)
        self.request_class = RequestClass(self.request_class)
        if not self.kernels:
            raise ValueError("request needs at least one kernel")

    def complete(self, time: float) -> None:
        if time < self.arrival_time:
            raise ValueError("completion before arrival")
        self.completion_time = time

    @property
    def latency(self) -> float:
        if self.completion_time is None:
            raise ValueError(f"request {self.id} has not completed")
        return self.completion_time - self.arrival_time

    @property
    def service_time(self) -> int:
        return sum(k.nominal_duration for k in self.kernels)


@dataclass(frozen=True)
class SchedulerParams:
    alpha: int = 2
    beta: int = 10
    gamma: float = 2.0
    m: int = 1
    UL: int = 512
    LL: int = 64
    seed_tokens: int = 4

    def __post_init__(self) -> None:
        if not 0 <= self.alpha < self.beta:
            raise ValueError("need 0 <= alpha < beta")
        if self.LL > self.UL:
            raise ValueError("need LL <= UL")
        if self.gamma <= 1:
            raise ValueError("gamma must be > 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 1 <= self.seed_tokens <= self.LL:
            raise ValueError("need 1 <= seed_tokens <= LL")


@dataclass(frozen=True)
class RequestProfile:
    """Kernel makeup of one inference request (batch size 1)."""

    kernels: int = 50
    kernel_us: int = 1_000
    demand: float = 0.5
    memory_peak: int = 3 * GIB

    def __post_init__(self) -> None:
        if self.kernels < 1:
            raise ValueError("profile needs at least one kernel")
        KernelOp(self.kernel_us, self.demand)

    @property
    def service_time(self) -> int:
        return self.kernels * self.kernel_us


@dataclass
class SimReport:
    policy: str
    mode: str
    train_tput_norm: float
    offline_tput_rps: float
    online_p95_ms: float | None
    gpu_util_pct: float
    overhead_pct: float
    extra: dict = field(default_factory=dict, compare=False, repr=False)
