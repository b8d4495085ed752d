"""Evaluation quantities computed from finished runs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

from .model import InferenceRequest, SimReport
from .sim import RunResult

REPORT_COLUMNS = ("policy", "mode", "train_tput_norm", "offline_tput_rps", "online_p95_ms",
                  "gpu_util_pct", "overhead_pct")


@dataclass(frozen=True)
class Throughput:
    iterations_per_s: float
    ratio: float | None

    @property
    def normalized(self) -> bool:
        return self.ratio is not None


def training_throughput(run: RunResult, baseline: RunResult | None = None) -> Throughput:
    """Iterations per second, normalized to an exclusive baseline when one is given."""
    rate = run.iteration_rate
    if baseline is None:
        return Throughput(rate, None)
    return Throughput(rate, rate / baseline.iteration_rate)


def offline_throughput(run: RunResult) -> float:
    """Offline requests completed per second of training makespan."""
    return run.offline_done / (run.training_end / 1e6)


def p95_latency(latencies: Iterable[float | InferenceRequest]) -> float:
    """Nearest-rank 95th percentile; no interpolation."""
    values = sorted(x.latency if isinstance(x, InferenceRequest) else x for x in latencies)
    if not values:
        raise ValueError("p95 of an empty latency set")
    rank = math.ceil(0.95 * len(values))
    return values[rank - 1]


def overhead(with_infra: RunResult, without: RunResult) -> float:
    """Fractional training slowdown caused by an idle control plane."""
    return 1.0 - with_infra.iteration_rate / without.iteration_rate


def expected_overhead(compute_us: float, bubble_us: float, period_us: float,
                      delay_us: float) -> float:
    """Closed form for the per-tick delay model.

    Every tick that falls while training issues kernels postpones its next
    launch by ``delay_us``, so a compute stretch of length C grows to
    C * period / (period - delay).
    """
    if delay_us >= period_us:
        return 1.0
    stretched = compute_us * period_us / (period_us - delay_us)
    return 1.0 - (compute_us + bubble_us) / (stretched + bubble_us)


def utilization_timeline(run: RunResult) -> list[tuple[float, float]]:
    """Per-window (end time in us, busy percent) samples for the training GPU."""
    return [(t, 100.0 * frac) for t, frac, _ in run.utilization]


def utilization_integral(run: RunResult) -> float:
    return sum(frac * width for _, frac, width in run.utilization)


def gpu_util_pct(run: RunResult) -> float:
    return 100.0 * run.busy_time / run.end_time if run.end_time else 0.0


def build_report(run: RunResult, baseline: RunResult | None,
                 idle_infra: RunResult | None = None) -> SimReport:
    tput = training_throughput(run, baseline)
    ratio = tput.ratio if tput.normalized else tput.iterations_per_s
    done = [r for r in run.online_requests if r.completion_time is not None]
    p95 = p95_latency(done) / 1000 if done else None
    ovh = 100.0 * overhead(idle_infra, baseline) if idle_infra and baseline else 0.0
    return SimReport(run.policy, run.mode, ratio, offline_throughput(run), p95,
                     gpu_util_pct(run), ovh, extra={"normalized": tput.normalized})


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_report(rows: Sequence[SimReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in rows:
        w.writerow([_fmt(getattr(row, c)) for c in REPORT_COLUMNS])
    return buf.getvalue()


def parse_report(text: str) -> list[SimReport]:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise ValueError(f"unexpected report header {reader.fieldnames}")
    for rec in reader:
        kw = {}
        for f in fields(SimReport):
            if f.name not in rec:
                continue
            raw = rec[f.name]
            if f.name in ("policy", "mode"):
                kw[f.name] = raw
            else:
                kw[f.name] = None if raw == "" else float(raw)
        rows.append(SimReport(**kw))
    return rows


def format_timeline(samples: Iterable[tuple[float, float]]) -> str:
    return "time_us,util_pct\n" + "".join(f"{t:.3f},{u:.4f}\n" for t, u in samples)
