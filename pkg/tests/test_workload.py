import statistics

import pytest

from bubblefill.model import Mode, RequestProfile
from bubblefill.workload import (
    dump_arrivals, dump_trace, load_arrivals, load_trace, make_request, make_trace,
    poisson_arrivals, segment_kernels,
)


@pytest.mark.parametrize("mode,n", [("DP", 1), ("MP", 4), ("PP", 8)])
def test_layouts(mode, n):
    t = make_trace(mode, 1_000_003, 0.3, 5)
    assert sum(s.duration for s in t.segments) == t.iteration_period
    assert len(t.bubbles) == n
    assert sum(t.bubbles) == round(0.3 * 1_000_003)
    demand = {s.kernel.compute_demand for s in t.segments if s.kind == "compute"}
    assert demand == ({0.7} if mode == "PP" else {1.0})


def test_dp_bubble_is_at_iteration_end():
    t = make_trace("DP", 1_500_000, 0.3, 1)
    assert [s.kind for s in t.segments] == ["compute", "bubble"]
    assert t.segments[1].duration == 450_000


def test_segment_kernels_cover_segment():
    t = make_trace("PP", 1_000_000, 0.2, 1)
    seg = t.segments[0]
    ks = segment_kernels(seg)
    assert sum(k.nominal_duration for k in ks) == seg.duration
    assert all(k.nominal_duration <= 1000 for k in ks)


def test_bad_bubble_pct():
    with pytest.raises(ValueError):
        make_trace("DP", 1000, 1.0, 1)


def test_poisson_determinism_and_rate():
    a = poisson_arrivals(10, 5000, 7)
    assert a == poisson_arrivals(10, 5000, 7)
    assert a != poisson_arrivals(10, 5000, 8)
    assert a == sorted(a)
    gaps = [y - x for x, y in zip([0] + a, a)]
    assert statistics.mean(gaps) == pytest.approx(100_000, rel=0.05)


def test_request_profile():
    r = make_request(RequestProfile(), "offline")
    assert len(r.kernels) == 50 and r.service_time == 50_000


def test_text_round_trips():
    t = make_trace(Mode.MP, 40_001, 0.25, 3)
    assert load_trace(dump_trace(t)) == t
    times = poisson_arrivals(5, 50, 1)
    assert load_arrivals(dump_arrivals(times)) == times
    with pytest.raises(ValueError):
        load_arrivals("time_us,request_id\n5,0\n3,1\n")
