import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from epsprio.mapping import ChromiumPriority as P
from epsprio.mapping import MappingStrategy, ResourceType as T, Strategy
from epsprio.netsim import LinkModel, assign_priorities, simulate
from epsprio.scheduler import SchedulerMode

from builders import doc, manifest, random_manifest, res

FIFO = SchedulerMode.SEQUENTIAL_FIFO
NONINC = SchedulerMode.URGENCY_NON_INCREMENTAL
INC = SchedulerMode.URGENCY_INCREMENTAL
RTAM = MappingStrategy(Strategy.RTAM)
DM = MappingStrategy(Strategy.DM)

IDEAL = dict(one_way_delay_ms=0.0, loss_rate=0.0)


def all_configs():
    yield None, FIFO
    for s, m in itertools.product([DM, RTAM, MappingStrategy(Strategy.SAM, 5000)], SchedulerMode):
        yield s, m


def test_link_defaults():
    link = LinkModel()
    assert link.one_way_delay_ms == 10
    assert link.loss_rate == 0.0005
    hard = LinkModel.challenging()
    assert (hard.one_way_delay_ms, hard.loss_rate) == (20, 0.001)


@pytest.mark.parametrize(
    "kwargs",
    [dict(bandwidth_bytes_per_sec=0), dict(loss_rate=1.0), dict(loss_rate=-0.1), dict(one_way_delay_ms=-1), dict(seed=2**64)],
)
def test_link_validation(kwargs):
    with pytest.raises(ValueError):
        LinkModel(**kwargs)


def test_single_document_arithmetic():
    m = manifest(doc(100_000))
    trace = simulate(m, None, FIFO, LinkModel(100_000, **IDEAL))
    assert trace.timings["doc"].completion_ms == pytest.approx(1000.0, rel=1e-12)


def test_two_resources_sequential():
    m = manifest(doc(100_000), res("a", T.IMAGE, 100_000))
    trace = simulate(m, None, FIFO, LinkModel(100_000, **IDEAL))
    assert trace.timings["doc"].completion_ms == pytest.approx(1000.0, rel=1e-12)
    assert trace.timings["a"].completion_ms == pytest.approx(2000.0, rel=1e-12)


def test_hand_computed_timeline_with_delay():
    # 1200 bytes take exactly 1 ms at 1.2 MB/s
    m = manifest(doc(2400), res("a", T.SCRIPT, 1200), res("b", T.IMAGE, 600, after="a"))
    trace = simulate(m, None, FIFO, LinkModel(1_200_000, 10.0, 0.0), quantum_bytes=1200)
    t = trace.timings
    assert (t["doc"].request_ms, t["doc"].first_byte_ms, t["doc"].completion_ms) == pytest.approx((10, 21, 22))
    # request leaves the client at 32, reaches the server at 42
    assert (t["a"].request_ms, t["a"].first_byte_ms, t["a"].completion_ms) == pytest.approx((42, 53, 53))
    assert (t["b"].request_ms, t["b"].completion_ms) == pytest.approx((73, 83.5))


def test_baseline_requires_fifo():
    with pytest.raises(ValueError):
        simulate(manifest(doc()), None, NONINC)


def test_assign_priorities():
    m = manifest(doc(), res("img", T.IMAGE, 10, P.HIGH), res("css", T.STYLESHEET, 10, P.MEDIUM))
    p = assign_priorities(m, RTAM, INC)
    assert [p[r].urgency for r in ("doc", "img", "css")] == [0, 3, 3]
    assert all(v.incremental for v in p.values())
    assert not any(v.incremental for v in assign_priorities(m, RTAM, NONINC).values())
    assert {v.urgency for v in assign_priorities(m, None, FIFO).values()} == {3}


def _check_trace(trace, m):
    assert set(trace.timings) == {r.resource_id for r in m}
    for t in trace.timings.values():
        assert t.request_ms <= t.first_byte_ms <= t.completion_ms
    delivered = trace.delivered_bytes()
    for r in m:
        assert delivered[r.resource_id] == r.size_bytes


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.sampled_from([0.0, 0.05, 0.3]))
def test_trace_invariants(seed, n, loss):
    m = random_manifest(random.Random(seed), n)
    link = LinkModel(500_000, 5.0, loss, seed)
    for strategy, mode in all_configs():
        _check_trace(simulate(m, strategy, mode, link, 1000), m)


def test_determinism_and_seed_independence_of_totals():
    m = random_manifest(random.Random(3), 15)
    link = LinkModel(400_000, 10.0, 0.2, 77)
    a = simulate(m, RTAM, NONINC, link)
    b = simulate(m, RTAM, NONINC, link)
    assert a == b
    other = simulate(m, RTAM, NONINC, LinkModel(400_000, 10.0, 0.2, 78))
    assert other.events != a.events
    assert other.delivered_bytes() == a.delivered_bytes()


def test_losses_are_counted_in_both_directions():
    m = random_manifest(random.Random(9), 20)
    trace = simulate(m, DM, NONINC, LinkModel(1_000_000, 5.0, 0.3, 1))
    assert trace.lost_quanta > 0
    assert trace.lost_requests > 0
    _check_trace(trace, m)


def test_zero_loss_zero_delay_is_work_conserving():
    for seed in range(25):
        m = random_manifest(random.Random(seed), 12)
        link = LinkModel(250_000, **IDEAL)
        expected = m.total_bytes * 1000.0 / link.bandwidth_bytes_per_sec
        finishes = set()
        for strategy, mode in all_configs():
            trace = simulate(m, strategy, mode, link)
            page = max(t.completion_ms for t in trace.timings.values())
            assert abs(page - expected) <= link.transmit_ms(1200)
            finishes.add(round(page, 6))
        assert len(finishes) == 1


def test_page_complete_policy_independent_without_discovery_chains():
    # with delay, only the round trip after the root matters when nothing chains
    for seed in range(10):
        m = random_manifest(random.Random(seed), 12, chains=False)
        link = LinkModel(250_000, 10.0, 0.0)
        pages = {
            round(max(t.completion_ms for t in simulate(m, s, mode, link).timings.values()), 6)
            for s, mode in all_configs()
        }
        assert len(pages) == 1


def test_urgency_order_respected_for_simultaneous_requests():
    for seed in range(40):
        m = random_manifest(random.Random(seed), 14, chains=False)
        for strategy in (DM, RTAM):
            prio = assign_priorities(m, strategy, NONINC)
            trace = simulate(m, strategy, NONINC, LinkModel(300_000, 10.0, 0.0))
            others = [r.resource_id for r in m if r.resource_id != "doc"]
            for a, b in itertools.permutations(others, 2):
                if prio[a].urgency < prio[b].urgency:
                    assert trace.timings[a].completion_ms < trace.timings[b].completion_ms


def test_trace_csv():
    m = manifest(doc(1000), res("a"))
    csv_text = simulate(m, None, FIFO, LinkModel(**IDEAL)).to_csv()
    lines = csv_text.splitlines()
    assert lines[0] == "resource_id,request_ms,first_byte_ms,completion_ms"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["doc", "a"]
