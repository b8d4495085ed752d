import pytest

from bubblefill.model import SchedulerParams, Status
from bubblefill.monitor import BubbleSignal
from bubblefill.scheduler import (
    CONSERVATIVE, INCREMENTAL, STABLE, KernelScheduler, SchedulerState, decide,
    format_decisions, preempt_busy,
)


def step(z, g, **kw):
    st = SchedulerState(SchedulerParams(**kw), global_tokens=g)
    per, status = decide(st, BubbleSignal(z, 0.0))
    return per, status, st


def test_incremental_phase_example():
    per, status, st = step(5, 8, m=2)
    assert (st.global_tokens, per, status, st.phase) == (16, 8, Status.BUSY, INCREMENTAL)


def test_stable_phase_example():
    per, status, st = step(20, 50, m=2, UL=80)
    assert (st.global_tokens, per, status, st.phase) == (80, 40, Status.IDLE, STABLE)


def test_conservative_resets():
    per, status, st = step(2, 300)
    assert (st.global_tokens, per, status, st.phase) == (0, 0, Status.BUSY, CONSERVATIVE)


def test_seed_lifts_zero_accumulator():
    per, _, st = step(3, 0)
    assert st.global_tokens == 8 and per == 8


def test_incremental_caps_at_ll_and_stable_grows_to_ul():
    st = SchedulerState(SchedulerParams())
    for _ in range(10):
        decide(st, BubbleSignal(5, 0.0))
    assert st.global_tokens == 64
    for _ in range(10):
        decide(st, BubbleSignal(11, 0.0))
    assert st.global_tokens == 512


def test_preempt_busy():
    assert preempt_busy(1400, 0, 1500, 50) is Status.IDLE
    assert preempt_busy(1451, 0, 1500, 50) is Status.BUSY


def test_scheduler_broadcasts_and_logs():
    sched = KernelScheduler(SchedulerParams(m=2))
    grants, statuses = [], []
    sched.subscribe_offline(grants.append)
    sched.subscribe_offline(grants.append)
    sched.subscribe_online(statuses.append)
    sched.on_signal(BubbleSignal(12, 2000.0))
    assert grants == [4, 4] and statuses == [Status.IDLE]
    text = format_decisions(sched.decisions)
    assert text.splitlines()[1] == "2000.000,12,stable,8,4,idle"


def test_state_validation():
    with pytest.raises(ValueError):
        SchedulerState(SchedulerParams(), global_tokens=513)
