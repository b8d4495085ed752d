"""Scenario configuration files.

A scenario is flat ``key = value`` text, one setting per line, ``#`` starts a
comment. Dotted keys group related settings::

    trace.mode = DP
    trace.iteration_ms = 1500
    trace.bubble_pct = 30
    workload.class = offline
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .model import GIB, MS, GpuSpec, Mode, RequestProfile, SchedulerParams
from .monitor import MonitorConfig

POLICIES = ("specinf", "co_exec", "exclusive")
WORKLOAD_CLASSES = ("offline", "online", "none")
DEFAULT_SEED = 20240229


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>") -> None:
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


# key -> (attribute, type)
_FIELDS: dict[str, tuple[str, type]] = {
    "gpu.memory_gib": ("gpu_memory_gib", float),
    "trace.mode": ("trace_mode", str),
    "trace.iteration_ms": ("iteration_ms", float),
    "trace.bubble_pct": ("bubble_pct", float),
    "trace.iterations": ("iterations", int),
    "trace.file": ("trace_file", str),
    "training.memory_gib": ("training_memory_gib", float),
    "scheduler.alpha": ("alpha", int),
    "scheduler.beta": ("beta", int),
    "scheduler.gamma": ("gamma", float),
    "scheduler.ul": ("ul", int),
    "scheduler.ll": ("ll", int),
    "scheduler.seed_tokens": ("seed_tokens", int),
    "monitor.period_ms": ("period_ms", float),
    "monitor.window_len": ("window_len", int),
    "control.delay_us": ("control_delay_us", int),
    "inference.instances": ("instances", int),
    "inference.memory_gib": ("inference_memory_gib", float),
    "inference.kernels": ("kernels", int),
    "inference.kernel_us": ("kernel_us", int),
    "inference.demand": ("demand", float),
    "workload.class": ("workload_class", str),
    "workload.lambda": ("lam", float),
    "workload.count": ("count", int),
    "workload.arrivals_file": ("arrivals_file", str),
    "policy": ("policy", str),
    "rng_seed": ("rng_seed", int),
}
_REQUIRED = ("trace.mode", "trace.iteration_ms", "trace.bubble_pct", "trace.iterations")


@dataclass(frozen=True)
class Scenario:
    trace_mode: str
    iteration_ms: float
    bubble_pct: float
    iterations: int
    gpu_memory_gib: float = 40.0
    trace_file: str = ""
    training_memory_gib: float = 32.0
    alpha: int = 2
    beta: int = 10
    gamma: float = 2.0
    ul: int = 512
    ll: int = 64
    seed_tokens: int = 4
    period_ms: float = 2.0
    window_len: int = 64
    control_delay_us: int = 0
    instances: int = 1
    inference_memory_gib: float = 3.0
    kernels: int = 50
    kernel_us: int = 1000
    demand: float = 0.5
    workload_class: str = "offline"
    lam: float = 10.0
    count: int = 2000
    arrivals_file: str = ""
    policy: str = "specinf"
    rng_seed: int = DEFAULT_SEED
    base_dir: str = dataclasses.field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.trace_mode not in {m.value for m in Mode}:
            raise ConfigError(f"trace.mode must be one of DP, MP, PP, got {self.trace_mode!r}")
        if not 0 < self.bubble_pct < 100:
            raise ConfigError(f"trace.bubble_pct must be a percentage in (0, 100), got {self.bubble_pct}")
        if self.workload_class not in WORKLOAD_CLASSES:
            raise ConfigError(f"workload.class must be one of {', '.join(WORKLOAD_CLASSES)}")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {', '.join(POLICIES)}")
        if self.iterations < 1 or self.iteration_ms <= 0:
            raise ConfigError("trace.iterations and trace.iteration_ms must be positive")
        if self.instances < 0:
            raise ConfigError("inference.instances must be >= 0")
        if self.workload_class == "online" and (self.lam <= 0 or self.count < 1):
            raise ConfigError("online workloads need workload.lambda > 0 and workload.count >= 1")
        if self.control_delay_us < 0:
            raise ConfigError("control.delay_us must be >= 0")
        try:
            self.scheduler_params()
            self.monitor_config()
            self.profile()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # -- derived model objects ------------------------------------------

    @property
    def iteration_us(self) -> int:
        return round(self.iteration_ms * MS)

    def gpu(self) -> GpuSpec:
        return GpuSpec(round(self.gpu_memory_gib * GIB))

    def scheduler_params(self, m: int = 1) -> SchedulerParams:
        return SchedulerParams(self.alpha, self.beta, self.gamma, m, self.ul, self.ll,
                               self.seed_tokens)

    def monitor_config(self) -> MonitorConfig:
        return MonitorConfig(round(self.period_ms * MS), self.window_len)

    def profile(self) -> RequestProfile:
        return RequestProfile(self.kernels, self.kernel_us, self.demand,
                              round(self.inference_memory_gib * GIB))

    def resolve(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() or not self.base_dir else Path(self.base_dir) / p

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def parse_scenario(text: str, source: str = "<scenario>", base_dir: str = "") -> Scenario:
    values: dict[str, object] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno, source)
        seen[key] = lineno
        attr, typ = _FIELDS[key]
        try:
            values[attr] = typ(value)
        except ValueError:
            raise ConfigError(f"{key}: cannot read {value!r} as {typ.__name__}", lineno, source) from None
    missing = [k for k in _REQUIRED if k not in seen]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}", None, source)
    try:
        return Scenario(base_dir=base_dir, **values)
    except ConfigError as exc:
        key = next((k for k in _FIELDS if k in str(exc)), None)
        line = seen.get(key) if key else None
        raise ConfigError(str(exc).split(": ", 1)[-1], line, source) from None


def load_scenario(path: Path | str) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", None, str(path)) from None
    return parse_scenario(text, str(path), str(path.parent))


def dump_scenario(sc: Scenario) -> str:
    lines = []
    for key, (attr, typ) in _FIELDS.items():
        value = getattr(sc, attr)
        lines.append(f"{key} = {value!r}" if typ is float else f"{key} = {value}")
    return "\n".join(lines) + "\n"
