import random

import pytest

from bubblefill.engine import Engine, Event, Gpu, format_log
from bubblefill.model import GIB, GpuSpec, KernelOp


def _run(launches):
    """launches: (time, nominal, demand) -> {index: end time}."""
    eng = Engine()
    gpu = Gpu(eng)
    ends = {}
    for i, (t, dur, d) in enumerate(launches):
        def go(_ev, i=i, dur=dur, d=d):
            gpu.launch_kernel(f"w{i}", KernelOp(dur, d), lambda _h, i=i: ends.__setitem__(i, eng.now))
        eng.at(t, "timer", go)
    eng.run()
    return ends, gpu, eng


def test_single_kernel_no_contention():
    ends, _, _ = _run([(0, 10_000, 0.5)])
    assert ends[0] == 10_000


def test_two_oversubscribed_kernels_stretch():
    ends, _, _ = _run([(0, 10_000, 0.8), (0, 10_000, 0.8)])
    assert ends[0] == pytest.approx(16_000)
    assert ends[1] == pytest.approx(16_000)


def test_undersubscribed_pair_runs_at_full_speed():
    ends, _, _ = _run([(0, 4000, 0.5), (1000, 4000, 0.5)])
    assert ends == {0: 4000, 1: 5000}


def test_membership_churn_hand_computed():
    # 0..1000 alone (1000 done); 1000..: D=2, rate 0.5.
    # k0 needs 3000 more -> 6000 us at half rate, k1 (2000) ends first at 5000.
    ends, _, _ = _run([(0, 4000, 1.0), (1000, 2000, 1.0)])
    assert ends[1] == pytest.approx(5000)
    assert ends[0] == pytest.approx(6000)


def test_busy_time_and_work_conservation():
    launches = [(0, 3000, 0.6), (500, 2000, 0.7), (4000, 1000, 0.3)]
    _, gpu, eng = _run(launches)
    assert gpu.work_done == pytest.approx(sum(d * n for _, n, d in launches), abs=1e-6)
    # oversubscribed stretches run at rate 1/D, so busy time still equals work
    assert gpu.busy_time() == pytest.approx(gpu.work_done, abs=1e-6)
    assert eng.now > 4000


def test_memory_admission_is_enforced():
    gpu = Gpu(Engine(), spec=GpuSpec(memory_capacity=4 * GIB))
    gpu.admit("a", 3 * GIB)
    with pytest.raises(MemoryError):
        gpu.admit("b", 2 * GIB)


def test_event_validation_and_past_scheduling():
    with pytest.raises(ValueError):
        Event(0.0, "bogus")
    eng = Engine()
    eng.at(10.0, "timer")
    eng.run()
    with pytest.raises(ValueError):
        eng.at(5.0, "timer")


def test_same_instant_events_fire_in_schedule_order():
    eng = Engine()
    seen = []
    for name in "abc":
        eng.at(7.0, "timer", lambda ev, n=name: seen.append(n))
    eng.run()
    assert seen == ["a", "b", "c"]


def test_run_until_leaves_later_events():
    eng = Engine()
    eng.at(5.0, "timer")
    eng.at(50.0, "timer")
    eng.run(until=10.0)
    assert eng.now == 10.0 and eng.pending == 1


def test_log_is_deterministic():
    rng = random.Random(3)
    launches = [(rng.randrange(0, 5000, 10), rng.randint(1, 3000), rng.uniform(0.1, 1.0))
                for _ in range(20)]
    a = format_log(_run(launches)[2].log)
    b = format_log(_run(launches)[2].log)
    assert a == b
    assert a.startswith("time_us,kind,gpu,instance,detail\n")
