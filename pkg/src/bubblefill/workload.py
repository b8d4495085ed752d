"""Synthetic training traces, request profiles and Poisson arrival streams."""

from __future__ import annotations

import itertools
import random
from typing import Iterable

from .model import (
    GIB, MS, InferenceRequest, KernelOp, Mode, RequestClass, RequestProfile, Segment,
    TrainingTrace,
)

TRAINING_KERNEL_US = 1 * MS
BUBBLES_PER_ITERATION = {Mode.DP: 1, Mode.MP: 4, Mode.PP: 8}
COMPUTE_DEMAND = {Mode.DP: 1.0, Mode.MP: 1.0, Mode.PP: 0.7}
DEFAULT_TRAINING_MEMORY = 32 * GIB


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def make_trace(mode: Mode | str, iteration_period: int, bubble_pct: float, iterations: int,
               seed: int | None = None, memory_peak: int = DEFAULT_TRAINING_MEMORY,
               compute_demand: float | None = None) -> TrainingTrace:
    """Build one periodic training iteration.

    DP puts a single bubble at the end of the iteration, MP four evenly spaced
    ones and PP eight short ones with sub-unity compute demand. Shapes are
    fully deterministic; ``seed`` is accepted so callers can pass a scenario's
    seed uniformly.
    """
    mode = Mode(mode)
    if not 0.0 < bubble_pct < 1.0:
        raise ValueError(f"bubble_pct must be in (0, 1), got {bubble_pct}")
    n = BUBBLES_PER_ITERATION[mode]
    bubble_total = round(bubble_pct * iteration_period)
    compute_total = iteration_period - bubble_total
    if bubble_total < n or compute_total < n:
        raise ValueError("iteration too short for this bubble layout")
    demand = COMPUTE_DEMAND[mode] if compute_demand is None else compute_demand
    template = KernelOp(TRAINING_KERNEL_US, demand)
    segments: list[Segment] = []
    for c, b in zip(_split(compute_total, n), _split(bubble_total, n)):
        segments.append(Segment("compute", c, template))
        segments.append(Segment("bubble", b))
    return TrainingTrace(mode, iteration_period, tuple(segments), iterations, memory_peak)


def segment_kernels(segment: Segment) -> list[KernelOp]:
    """Back-to-back kernels covering a compute segment; the last may be short."""
    tpl = segment.kernel
    full, rest = divmod(segment.duration, tpl.nominal_duration)
    kernels = [tpl] * full
    if rest:
        kernels.append(KernelOp(rest, tpl.compute_demand))
    return kernels


def poisson_arrivals(lam: float, count: int, seed: int | None) -> list[int]:
    """Arrival instants (integer us) with exponential gaps of mean 1/lam seconds."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    t = 0.0
    out = []
    for _ in range(count):
        t += rng.expovariate(lam)
        out.append(round(t * 1_000_000))
    return out


def make_request(profile: RequestProfile, request_class: RequestClass | str,
                 request_id: int = 0, arrival_time: float = 0.0) -> InferenceRequest:
    kernel = KernelOp(profile.kernel_us, profile.demand)
    return InferenceRequest(request_id, arrival_time, (kernel,) * profile.kernels,
                            RequestClass(request_class))


def offline_backlog(profile: RequestProfile) -> Iterable[InferenceRequest]:
    """Endless stream of offline requests, all available at time zero."""
    for i in itertools.count():
        yield make_request(profile, RequestClass.OFFLINE, i)


# -- text formats ---------------------------------------------------------

def dump_trace(trace: TrainingTrace) -> str:
    lines = [
        f"# mode={trace.mode.value} iteration_us={trace.iteration_period} "
        f"iterations={trace.total_iterations} memory_peak={trace.memory_peak}",
        "time_us,kind,duration_us,kernel_us,demand",
    ]
    t = 0
    for seg in trace.segments:
        if seg.kind == "compute":
            k = seg.kernel
            lines.append(f"{t},compute,{seg.duration},{k.nominal_duration},{k.compute_demand!r}")
        else:
            lines.append(f"{t},bubble,{seg.duration},,")
        t += seg.duration
    return "\n".join(lines) + "\n"


def load_trace(text: str) -> TrainingTrace:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not rows or not rows[0].startswith("#"):
        raise ValueError("trace file must start with a '# mode=...' header")
    header = dict(kv.split("=", 1) for kv in rows[0][1:].split())
    segments = []
    expected = 0
    for ln in rows[2:]:
        time_us, kind, dur, kus, demand = ln.split(",")
        if int(time_us) != expected:
            raise ValueError(f"segment offset {time_us} does not follow previous segments")
        dur = int(dur)
        kernel = KernelOp(int(kus), float(demand)) if kind == "compute" else None
        segments.append(Segment(kind, dur, kernel))
        expected += dur
    return TrainingTrace(Mode(header["mode"]), int(header["iteration_us"]), tuple(segments),
                         int(header["iterations"]), int(header["memory_peak"]))


def dump_arrivals(times: Iterable[int]) -> str:
    return "time_us,request_id\n" + "".join(f"{t},{i}\n" for i, t in enumerate(times))


def load_arrivals(text: str) -> list[int]:
    out = []
    for ln in text.splitlines()[1:]:
        if ln.strip():
            out.append(int(ln.split(",")[0]))
    if out != sorted(out):
        raise ValueError("arrival times must be non-decreasing")
    return out


