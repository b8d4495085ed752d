"""Collocation admission: the memory rule and the bubble-feasibility rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import GpuSpec, InstanceKind, InstanceSpec, TrainingTrace

ADMIT = "admit"
REJECT = "reject"
MEM = "MEM"
BUBBLE = "BUBBLE"


@dataclass(frozen=True)
class Verdict:
    instance: str
    admitted: bool
    reason: str = ""

    def line(self) -> str:
        if self.admitted:
            return f"{self.instance},{ADMIT},"
        return f"{self.instance},{REJECT},{self.reason}"


def check_memory(gpu: GpuSpec, instances: Sequence[InstanceSpec]) -> str:
    if not instances:
        raise ValueError("need at least one instance")
    total = sum(i.memory_peak for i in instances)
    return ADMIT if total < gpu.memory_capacity else REJECT


def check_online_feasibility(trace: TrainingTrace, inst: InstanceSpec) -> str:
    if inst.kind is not InstanceKind.ONLINE:
        raise ValueError(f"{inst.id} is {inst.kind.value}, not an online instance")
    return ADMIT if inst.min_service_time < trace.max_bubble else REJECT


@dataclass
class Packing:
    admitted: list[InstanceSpec]
    verdicts: list[Verdict]

    @property
    def m(self) -> int:
        # with nobody to consume grants the divisor is irrelevant; 1 avoids /0
        return max(1, len(self.admitted))

    @property
    def rejected(self) -> list[Verdict]:
        return [v for v in self.verdicts if not v.admitted]

    def report(self) -> str:
        return "instance,verdict,reason\n" + "".join(v.line() + "\n" for v in self.verdicts)


def pack(gpu: GpuSpec, training: InstanceSpec, candidates: Sequence[InstanceSpec],
         trace: TrainingTrace | None = None) -> Packing:
    """Greedy first-fit in the given order.

    A candidate that fails either rule is skipped and later ones are still
    tried, so the result depends on candidate order.
    """
    verdicts = []
    if check_memory(gpu, [training]) == REJECT:
        verdicts.append(Verdict(training.id, False, MEM))
        verdicts.extend(Verdict(c.id, False, MEM) for c in candidates)
        return Packing([], verdicts)
    verdicts.append(Verdict(training.id, True))
    admitted: list[InstanceSpec] = []
    for cand in candidates:
        if check_memory(gpu, [training, *admitted, cand]) == REJECT:
            verdicts.append(Verdict(cand.id, False, MEM))
            continue
        if cand.kind is InstanceKind.ONLINE:
            if trace is None:
                raise ValueError("online candidates need the training trace")
            if check_online_feasibility(trace, cand) == REJECT:
                verdicts.append(Verdict(cand.id, False, BUBBLE))
                continue
        admitted.append(cand)
        verdicts.append(Verdict(cand.id, True))
    return Packing(admitted, verdicts)
