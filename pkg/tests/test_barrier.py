from collections import deque

from bubblefill.barrier import BLOCK, FORWARD, GateLog, OfflineBarrier, OnlineGate
from bubblefill.model import InferenceRequest, KernelOp, Status

K1MS = KernelOp(1000, 0.5)  # 10 tokens
K200 = KernelOp(200, 0.5)  # 2 tokens


def make(budget=0):
    out = []
    b = OfflineBarrier("i0", lambda k, r, i: out.append((r, i)), budget=budget, log=GateLog())
    return b, out


def test_blocks_without_budget_then_forwards_on_grant():
    b, out = make()
    b.submit(K1MS, 0, 0)
    b.submit(K1MS, 0, 1)
    assert out == []
    b.grant(15)
    assert out == [(0, 0)]
    assert b.spent_this_period == 10


def test_budget_does_not_carry_over():
    b, out = make()
    b.grant(5)
    b.submit(K1MS, 0, 0)
    b.grant(5)
    assert out == []
    b.grant(10)
    assert out == [(0, 0)]


def test_fifo_no_skipping():
    b, out = make()
    b.submit(K1MS, 0, 0)
    b.submit(K200, 1, 0)
    b.grant(4)
    assert out == []
    assert b.forward_offline() == BLOCK


def test_ungated_passes_everything():
    b, out = make(budget=None)
    for i in range(5):
        b.submit(K1MS, 0, i)
    assert len(out) == 5 and not b.gated


def test_period_ledger_and_log():
    b, _ = make()
    b.submit(K1MS, 0, 0)
    b.grant(20)
    b.submit(K1MS, 0, 1)
    b.submit(K1MS, 0, 2)
    spends = b.finish()
    assert [(p.budget, p.spent) for p in spends] == [(0, 0), (20, 20)]
    assert all(p.spent <= p.budget for p in spends)
    actions = [r.action for r in b.log.records]
    assert actions.count(FORWARD) == 2 and actions.count(BLOCK) >= 1
    assert b.log.format().startswith("time_us,instance,action,request_id,kernel_index,tokens_spent\n")


def _req(i):
    return InferenceRequest(i, 0.0, (K1MS,), "online")


def test_online_gate_pulls_only_when_idle_one_at_a_time():
    q = deque([_req(0), _req(1)])
    g = OnlineGate("o0")
    assert g.pull_online(q) is None
    g.status = Status.IDLE
    assert g.pull_online(q).id == 0
    assert g.pull_online(q) is None
    assert g.complete(500.0).latency == 500.0
    assert g.pull_online(q).id == 1
