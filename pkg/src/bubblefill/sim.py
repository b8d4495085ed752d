"""Scenario runner: wires training, inference instances and the control plane
onto simulated GPUs under one of three sharing policies.

``specinf``
    bubble monitor + kernel scheduler + kernel barriers on a shared GPU.
``co_exec``
    every inference kernel is forwarded as soon as it is issued.
``exclusive``
    each inference instance gets its own GPU.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .admission import Packing, pack
from .barrier import COMPLETE, GateLog, OfflineBarrier, OnlineGate, PeriodSpend
from .engine import Engine, Gpu, LogRecord
from .model import (
    InferenceRequest, InstanceKind, InstanceSpec, KernelOp, RequestClass, RequestProfile, Status,
    TrainingTrace,
)
from .monitor import BubbleMonitor, MonitorConfig
from .scenario import POLICIES, Scenario
from .scheduler import Decision, KernelScheduler
from .workload import load_arrivals, load_trace, make_request, make_trace, poisson_arrivals, \
    segment_kernels


class AdmissionError(RuntimeError):
    def __init__(self, packing: Packing) -> None:
        self.packing = packing
        reasons = ", ".join(f"{v.instance}:{v.reason}" for v in packing.rejected)
        super().__init__(f"admission rejected ({reasons})")

    @property
    def reasons(self) -> list[str]:
        return sorted({v.reason for v in self.packing.rejected})


class TrainingInstance:
    """Replays a periodic trace: serial kernels during compute, timed waits in bubbles."""

    def __init__(self, engine: Engine, gpu: Gpu, trace: TrainingTrace, name: str = "train0",
                 monitor: BubbleMonitor | None = None, control_delay: int = 0) -> None:
        self.engine = engine
        self.gpu = gpu
        self.trace = trace
        self.name = name
        self.monitor = monitor
        self.control_delay = control_delay
        self._kernels = [segment_kernels(s) if s.kind == "compute" else [] for s in trace.segments]
        self.iteration = 0
        self._seg = 0
        self._k = 0
        self.in_compute = False
        self._compute_start = 0.0
        self._compute_end = -1.0
        self.pending_delay = 0
        self.boundaries: list[float] = []
        self.finished_at: float | None = None
        self.on_boundary: list = []
        self.on_finish: list = []

    def start(self) -> None:
        self._begin_segment()

    def _begin_segment(self) -> None:
        seg = self.trace.segments[self._seg]
        if seg.kind == "compute":
            self.in_compute = True
            self._compute_start = self.engine.now
            self._k = 0
            self._launch_next()
        else:
            self.in_compute = False
            self.engine.at(self.engine.now + seg.duration, "timer", self._end_segment,
                           instance=self.name, detail="bubble_end")

    def _launch_next(self, _ev=None) -> None:
        if self.pending_delay:
            delay, self.pending_delay = self.pending_delay, 0
            self.engine.at(self.engine.now + delay, "timer", self._launch_next,
                           instance=self.name, detail="control_delay")
            return
        kernel = self._kernels[self._seg][self._k]
        if self.monitor is not None:
            self.monitor.record_launch(self.engine.now)
        self.gpu.launch_kernel(self.name, kernel, self._kernel_done)

    def _kernel_done(self, _handle: int) -> None:
        self._k += 1
        if self._k < len(self._kernels[self._seg]):
            self._launch_next()
        else:
            self.in_compute = False
            self._compute_end = self.engine.now
            self._end_segment()

    def _end_segment(self, _ev=None) -> None:
        self._seg += 1
        if self._seg < len(self.trace.segments):
            self._begin_segment()
            return
        self._seg = 0
        self.iteration += 1
        now = self.engine.now
        self.boundaries.append(now)
        self.engine.note("iteration_boundary", self.gpu.index, self.name, f"it{self.iteration}")
        for cb in self.on_boundary:
            cb(now)
        if self.iteration >= self.trace.total_iterations:
            self.finished_at = now
            for cb in self.on_finish:
                cb(now)
        else:
            self._begin_segment()

    def on_tick(self) -> None:
        """Charge the per-tick control-plane delay while the training issues kernels.

        A tick is charged when it falls in (start, end] of a compute stretch, so
        same-instant ordering between the tick and segment edges does not matter.
        """
        if not self.control_delay:
            return
        now = self.engine.now
        if self.in_compute:
            charged = now > self._compute_start
        else:
            charged = now == self._compute_end and self._compute_start < now
        if charged:
            self.pending_delay += self.control_delay


class OfflineWorker:
    """Serial offline inference instance fed by an endless backlog."""

    def __init__(self, engine: Engine, gpu: Gpu, name: str, profile: RequestProfile,
                 budget: int | None, log: GateLog | None) -> None:
        self.engine = engine
        self.gpu = gpu
        self.name = name
        self.kernel = KernelOp(profile.kernel_us, profile.demand)
        self.kernels_per_request = profile.kernels
        self.barrier = OfflineBarrier(name, self._forward, lambda: engine.now, budget, log)
        self.log = log
        self.request_id = 0
        self.kernel_index = 0
        self.completions: list[float] = []
        self.active = False

    def start(self) -> None:
        self.active = True
        self._issue()

    def stop(self) -> None:
        self.active = False

    def _issue(self) -> None:
        self.barrier.submit(self.kernel, self.request_id, self.kernel_index)

    def _forward(self, kernel: KernelOp, _rid: int, _ki: int) -> None:
        self.gpu.launch_kernel(self.name, kernel, self._done)

    def _done(self, _handle: int) -> None:
        self.kernel_index += 1
        if self.kernel_index == self.kernels_per_request:
            now = self.engine.now
            self.completions.append(now)
            if self.log is not None:
                self.log.add(now, self.name, COMPLETE, self.request_id, self.kernel_index - 1, 0)
            self.request_id += 1
            self.kernel_index = 0
        if self.active:
            self._issue()


class OnlineWorker:
    """Online instance that pulls one request at a time from a shared queue."""

    def __init__(self, engine: Engine, gpu: Gpu, name: str, queue: deque,
                 status: Status, log: GateLog | None, on_complete) -> None:
        self.engine = engine
        self.gpu = gpu
        self.name = name
        self.queue = queue
        self.gate = OnlineGate(name, status, log, lambda: engine.now)
        self.on_complete = on_complete
        self._k = 0

    def set_status(self, status: Status) -> None:
        self.gate.status = status
        if status is Status.IDLE:
            self.try_pull()

    def try_pull(self) -> bool:
        req = self.gate.pull_online(self.queue)
        if req is None:
            return False
        self._k = 0
        self.gpu.launch_kernel(self.name, req.kernels[0], self._done)
        return True

    def _done(self, _handle: int) -> None:
        req = self.gate.in_flight
        self._k += 1
        if self._k < len(req.kernels):
            self.gpu.launch_kernel(self.name, req.kernels[self._k], self._done)
            return
        self.gate.complete(self.engine.now)
        self.on_complete(req)
        self.try_pull()


@dataclass
class RunResult:
    policy: str
    mode: str
    iterations: int
    training_end: float
    end_time: float
    boundaries: list[float]
    offline_completions: list[float]
    online_requests: list[InferenceRequest]
    decisions: list[Decision]
    gate_log: GateLog
    period_spends: dict[str, list[PeriodSpend]]
    utilization: list[tuple[float, float, float]]
    busy_time: float
    work_done: float
    packing: Packing
    events: list[LogRecord] = field(default_factory=list)
    monitor_window: list[tuple[int, int]] = field(default_factory=list)
    kernel_history: dict = field(default_factory=dict)

    @property
    def iteration_rate(self) -> float:
        """Training iterations per simulated second."""
        return self.iterations / (self.training_end / 1e6)

    @property
    def offline_done(self) -> int:
        return sum(1 for t in self.offline_completions if t <= self.training_end)


def build_trace(sc: Scenario) -> TrainingTrace:
    if sc.trace_file:
        trace = load_trace(sc.resolve(sc.trace_file).read_text())
        return TrainingTrace(trace.mode, trace.iteration_period, trace.segments, sc.iterations,
                             trace.memory_peak)
    return make_trace(sc.trace_mode, sc.iteration_us, sc.bubble_pct / 100, sc.iterations,
                      sc.rng_seed, memory_peak=round(sc.training_memory_gib * (1 << 30)))


def arrival_times(sc: Scenario, seed: int) -> list[int]:
    if sc.arrivals_file:
        return load_arrivals(sc.resolve(sc.arrivals_file).read_text())
    return poisson_arrivals(sc.lam, sc.count, seed)


def candidates(sc: Scenario) -> list[InstanceSpec]:
    profile = sc.profile()
    if sc.workload_class == "online":
        return [InstanceSpec(f"online{i}", InstanceKind.ONLINE, profile.memory_peak,
                             profile.service_time) for i in range(sc.instances)]
    return [InstanceSpec(f"offline{i}", InstanceKind.OFFLINE, profile.memory_peak)
            for i in range(sc.instances)]


def admit(sc: Scenario, trace: TrainingTrace) -> Packing:
    training = InstanceSpec("train0", InstanceKind.TRAINING, trace.memory_peak)
    packing = pack(sc.gpu(), training, candidates(sc), trace)
    if packing.rejected:
        raise AdmissionError(packing)
    return packing


def simulate(sc: Scenario, policy: str | None = None, seed: int | None = None,
             record_events: bool = False, keep_kernels: bool = False) -> RunResult:
    """Run one scenario under one policy and collect everything metrics need."""
    policy = policy or sc.policy
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    seed = sc.rng_seed if seed is None else seed
    trace = build_trace(sc)
    packing = admit(sc, trace)
    profile = sc.profile()
    mon_cfg: MonitorConfig = sc.monitor_config()
    engine = Engine(record=record_events)

    gpus = [Gpu(engine, 0, sc.gpu())]
    gpus[0].admit("train0", trace.memory_peak)
    placement: dict[str, Gpu] = {}
    for spec in packing.admitted:
        if policy == "exclusive":
            gpus.append(Gpu(engine, len(gpus), sc.gpu()))
        gpu = gpus[-1] if policy == "exclusive" else gpus[0]
        gpu.admit(spec.id, spec.memory_peak)
        placement[spec.id] = gpu
    for g in gpus:
        g.keep_history = keep_kernels

    coordinated = policy == "specinf"
    monitor = BubbleMonitor("train0", mon_cfg) if coordinated else None
    training = TrainingInstance(engine, gpus[0], trace, monitor=monitor,
                                control_delay=sc.control_delay_us if coordinated else 0)
    gate_log = GateLog()
    log = gate_log if coordinated else None

    scheduler = None
    if coordinated:
        est = profile.service_time if sc.workload_class == "online" else 0
        scheduler = KernelScheduler(sc.scheduler_params(packing.m), trace.iteration_period, est)
        training.on_boundary.append(scheduler.iteration_boundary)

    offline: list[OfflineWorker] = []
    online: list[OnlineWorker] = []
    queue: deque[InferenceRequest] = deque()
    served: list[InferenceRequest] = []
    requests: list[InferenceRequest] = []
    state = {"done": False}

    def finished() -> bool:
        return training.finished_at is not None and len(served) == len(requests)

    def maybe_stop() -> None:
        if finished() and not state["done"]:
            state["done"] = True
            for g in gpus:
                g.sample_utilization()
            engine.stop()

    def on_served(req: InferenceRequest) -> None:
        served.append(req)
        maybe_stop()

    for spec in packing.admitted:
        gpu = placement[spec.id]
        if spec.kind is InstanceKind.ONLINE:
            w = OnlineWorker(engine, gpu, spec.id, queue,
                             Status.BUSY if coordinated else Status.IDLE, log, on_served)
            online.append(w)
            if scheduler is not None:
                scheduler.subscribe_online(w.set_status)
        else:
            w = OfflineWorker(engine, gpu, spec.id, profile, 0 if coordinated else None, log)
            offline.append(w)
            if scheduler is not None:
                scheduler.subscribe_offline(w.barrier.grant)

    if sc.workload_class == "online":
        for i, t in enumerate(arrival_times(sc, seed)):
            req = make_request(profile, RequestClass.ONLINE, i, float(t))
            requests.append(req)

            def arrive(_ev, req=req) -> None:
                queue.append(req)
                for w in online:
                    if w.try_pull():
                        break

            engine.at(float(t), "request_arrival", arrive, instance="queue", detail=f"r{i}")

    def on_training_finish(now: float) -> None:
        for w in offline:
            w.stop()
        if scheduler is not None:
            scheduler.training_active = False
        maybe_stop()

    training.on_finish.append(on_training_finish)

    period = mon_cfg.period

    def tick(ev) -> None:
        for g in gpus:
            g.sample_utilization()
        if coordinated:
            training.on_tick()
            signal = monitor.tick(engine.now)
            d = scheduler.on_signal(signal)
            engine.note("scheduler_decision", 0, "cks",
                        f"z{d.zero_count}:{d.phase}:{d.global_tokens}:{d.status.value}")
        if not state["done"]:
            engine.at(engine.now + period, "monitor_tick", tick, gpu=0, instance="train0")

    engine.at(float(period), "monitor_tick", tick, gpu=0, instance="train0")
    training.start()
    if sc.workload_class == "offline":
        for w in offline:
            w.start()
    engine.run()
    if not state["done"]:
        raise RuntimeError("simulation drained without finishing")

    spends = {w.name: w.barrier.finish() for w in offline if w.barrier.gated}
    return RunResult(
        policy=policy,
        mode=trace.mode.value,
        iterations=training.iteration,
        training_end=training.finished_at,
        end_time=engine.now,
        boundaries=training.boundaries,
        offline_completions=[t for w in offline for t in w.completions],
        online_requests=requests,
        decisions=scheduler.decisions if scheduler else [],
        gate_log=gate_log,
        period_spends=spends,
        utilization=list(gpus[0].utilization_log),
        busy_time=gpus[0].busy_time(),
        work_done=gpus[0].work_done,
        packing=packing,
        events=engine.log,
        monitor_window=monitor.snapshot() if monitor else [],
        kernel_history={g.index: g.finished for g in gpus} if keep_kernels else {},
    )
