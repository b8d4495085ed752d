"""Command-line entry point.

Exit codes:
    0  success
    2  usage or scenario configuration error
    3  admission rejected (reason codes MEM / BUBBLE)
    4  output directory not writable
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import metrics, plotting
from .engine import format_log
from .model import SimReport
from .scenario import DEFAULT_SEED, POLICIES, ConfigError, Scenario, load_scenario
from .scheduler import format_decisions
from .sim import AdmissionError, RunResult, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSION = 3
EXIT_OUTPUT = 4

log = logging.getLogger("bubblefill")


@dataclass
class Evaluation:
    rows: list[SimReport]
    runs: dict[str, RunResult]
    baseline: RunResult


def evaluate(sc: Scenario, policies: Sequence[str], seed: int | None = None,
             record_events: bool = False) -> Evaluation:
    """Run each policy plus the exclusive baseline and build report rows."""
    baseline = simulate(sc, "exclusive", seed, record_events="exclusive" in policies and record_events)
    runs: dict[str, RunResult] = {}
    rows = []
    for policy in policies:
        run = baseline if policy == "exclusive" else simulate(sc, policy, seed, record_events)
        idle = None
        if policy == "specinf":
            idle = run if sc.workload_class == "none" else simulate(
                sc.replace(workload_class="none"), "specinf", seed)
        runs[policy] = run
        rows.append(metrics.build_report(run, baseline, idle))
    return Evaluation(rows, runs, baseline)


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text)
    return path


def write_outputs(ev: Evaluation, out: Path, dump_events: bool, plots: bool = True) -> list[Path]:
    written = [_write(out, "report.csv", metrics.format_report(ev.rows))]
    first = next(iter(ev.runs.values()))
    written.append(_write(out, "admission.csv", first.packing.report()))
    spec = ev.runs.get("specinf")
    if spec is not None:
        written.append(_write(out, "decisions.log", format_decisions(spec.decisions)))
        written.append(_write(out, "gates.log", spec.gate_log.format()))
        written.append(_write(out, "monitor_window.csv", "period_index,count\n" + "".join(
            f"{k},{c}\n" for k, c in spec.monitor_window)))
    else:
        written.append(_write(out, "decisions.log", format_decisions([])))
        written.append(_write(out, "gates.log", "time_us,instance,action,request_id,kernel_index,tokens_spent\n"))
    single = len(ev.runs) == 1
    timelines = {}
    for policy, run in ev.runs.items():
        tl = metrics.utilization_timeline(run)
        timelines[policy] = tl
        name = "utilization.csv" if single else f"utilization_{policy}.csv"
        written.append(_write(out, name, metrics.format_timeline(tl)))
        if dump_events:
            name = "events.log" if single else f"events_{policy}.log"
            written.append(_write(out, name, format_log(run.events)))
    if plots:
        written.append(plotting.plot_utilization(timelines, out / "utilization.png"))
        if not single:
            written.append(plotting.plot_comparison(ev.rows, out / "comparison.png"))
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bubblefill",
        description="Simulate inference filling of training bubbles on shared GPUs.",
    )
    p.add_argument("--scenario", required=True, metavar="PATH", help="scenario file")
    p.add_argument("--policy", metavar="NAME",
                   help=f"one of {', '.join(POLICIES)} (default: scenario's policy)")
    p.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    p.add_argument("--seed", type=int, metavar="U64",
                   help=f"RNG seed (default: scenario rng_seed, else {DEFAULT_SEED})")
    p.add_argument("--dump-events", action="store_true", help="also write the full event log")
    p.add_argument("--compare", action="store_true", help="run all three policies")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        sc = load_scenario(args.scenario)
        if args.policy is not None:
            if args.policy not in POLICIES:
                raise ConfigError(f"unknown policy {args.policy!r}; expected one of "
                                  f"{', '.join(POLICIES)}", None, "--policy")
            sc = sc.replace(policy=args.policy)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer", None, "--seed")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_OUTPUT

    policies = list(POLICIES) if args.compare else [sc.policy]
    try:
        ev = evaluate(sc, policies, args.seed, record_events=args.dump_events)
    except AdmissionError as exc:
        print(exc.packing.report(), end="")
        print(f"error: {exc}; reason {'/'.join(exc.reasons)}", file=sys.stderr)
        try:
            _write(out, "admission.csv", exc.packing.report())
        except OSError:
            pass
        return EXIT_ADMISSION
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        written = write_outputs(ev, out, args.dump_events, plots=not args.no_plots)
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    for path in written:
        log.info("wrote %s", path)
    print(metrics.format_report(ev.rows), end="")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
