import pytest

from bubblefill.admission import BUBBLE, MEM, REJECT, check_memory, check_online_feasibility, pack
from bubblefill.model import GIB, GpuSpec, InstanceSpec
from bubblefill.workload import make_trace

GPU = GpuSpec(memory_capacity=40 * GIB)
TRACE = make_trace("DP", 1_500_000, 0.3, 1)  # one 450 ms bubble


def train(mem=32):
    return InstanceSpec("train0", "training", mem * GIB)


def off(i, mem=3):
    return InstanceSpec(f"off{i}", "offline_inference", mem * GIB)


def test_memory_examples():
    assert check_memory(GPU, [train(32), off(0, 3)]) == "admit"
    assert check_memory(GPU, [train(32), off(0, 8)]) == REJECT
    with pytest.raises(ValueError):
        check_memory(GPU, [])


def test_bubble_examples():
    ok = InstanceSpec("o", "online_inference", GIB, 50_000)
    exact = InstanceSpec("o", "online_inference", GIB, 450_000)
    assert check_online_feasibility(TRACE, ok) == "admit"
    assert check_online_feasibility(TRACE, exact) == REJECT
    with pytest.raises(ValueError):
        check_online_feasibility(TRACE, off(0))


def test_greedy_first_fit_skips_and_continues():
    p = pack(GPU, train(30), [off(0, 5), off(1, 6), off(2, 4)])
    assert [s.id for s in p.admitted] == ["off0", "off2"]
    assert [(v.instance, v.reason) for v in p.rejected] == [("off1", MEM)]
    assert p.m == 2


def test_online_rejected_for_bubble():
    long = InstanceSpec("o", "online_inference", GIB, 500_000)
    p = pack(GPU, train(), [long], TRACE)
    assert p.rejected[0].reason == BUBBLE
    assert p.m == 1


def test_oversized_training_rejects_everything():
    p = pack(GPU, train(40), [off(0)])
    assert {v.reason for v in p.rejected} == {MEM}
    assert "train0,reject,MEM" in p.report()
