import random

import pytest
from hypothesis import given, settings, strategies as st

from epsprio.priority import PriorityParams
from epsprio.scheduler import Overrun, Scheduler, SchedulerMode, UnknownStream

from oracles import random_ops
from scenario import reference_selections, replay, selections

NONINC = SchedulerMode.URGENCY_NON_INCREMENTAL
INC = SchedulerMode.URGENCY_INCREMENTAL
FIFO = SchedulerMode.SEQUENTIAL_FIFO


def run(sched, quantum=1000, limit=100):
    picks = []
    for _ in range(limit):
        g = sched.select_next(quantum)
        if g is None:
            break
        picks.append(g.stream_id)
        sched.on_sent(*g)
    return picks


def test_enqueue_ids():
    s = Scheduler()
    assert s.enqueue(1000, PriorityParams(2)) == 1
    assert s.active_ids == [1]
    assert s.enqueue(500, PriorityParams(0)) == 2
    assert s.active_ids == [1, 2]
    with pytest.raises(ValueError):
        s.enqueue(0, PriorityParams())


def test_non_incremental_serves_class_in_order():
    s = Scheduler(NONINC)
    s.enqueue(3000, PriorityParams(2))
    s.enqueue(2000, PriorityParams(2))
    assert run(s) == [1, 1, 1, 2, 2]


def test_preemption_at_quantum_boundary():
    s = Scheduler(NONINC)
    s.enqueue(5000, PriorityParams(5))
    g = s.select_next(1000)
    s.on_sent(*g)
    s.enqueue(1500, PriorityParams(1))
    assert run(s) == [2, 2, 1, 1, 1, 1]


def test_single_stream_grant():
    s = Scheduler()
    s.enqueue(700, PriorityParams())
    assert tuple(s.select_next(1200)) == (1, 700)
    assert tuple(s.select_next(300)) == (1, 300)


def test_idle_when_empty():
    assert Scheduler().select_next(1200) is None


def test_on_sent():
    s = Scheduler()
    s.enqueue(100, PriorityParams())
    assert s.on_sent(1, 40) is False
    assert s.entry(1).bytes_remaining == 60
    assert s.on_sent(1, 60) is True
    assert len(s) == 0
    with pytest.raises(UnknownStream):
        s.on_sent(1, 1)


def test_overrun():
    s = Scheduler()
    s.enqueue(100, PriorityParams())
    with pytest.raises(Overrun):
        s.on_sent(1, 101)


def test_reprioritize_preempts_mid_transfer():
    s = Scheduler(NONINC)
    s.enqueue(3000, PriorityParams(5))
    s.enqueue(3000, PriorityParams(2))
    g = s.select_next(1000)
    assert g.stream_id == 2
    s.on_sent(*g)
    s.reprioritize(1, PriorityParams(0))
    assert s.select_next(1000).stream_id == 1


def test_reprioritize_identical_is_noop():
    a = Scheduler(NONINC)
    b = Scheduler(NONINC)
    for s in (a, b):
        s.enqueue(2500, PriorityParams(3))
        s.enqueue(2500, PriorityParams(3))
    b.reprioritize(1, PriorityParams(3))
    b.reprioritize(2, PriorityParams(3))
    assert run(a) == run(b)


def test_reprioritize_unknown():
    with pytest.raises(UnknownStream):
        Scheduler().reprioritize(9, PriorityParams())


def test_reprioritize_into_current_class_keeps_current():
    # an older stream joining the class being served does not interleave
    s = Scheduler(NONINC)
    s.enqueue(3000, PriorityParams(5))
    s.enqueue(3000, PriorityParams(2))
    s.on_sent(*s.select_next(1000))
    s.reprioritize(1, PriorityParams(2))
    assert run(s) == [2, 2, 1, 1, 1]


def test_preempted_stream_resumes_before_later_arrivals():
    s = Scheduler(NONINC)
    s.enqueue(2000, PriorityParams(5))
    s.on_sent(*s.select_next(1000))
    s.enqueue(1000, PriorityParams(1))
    s.enqueue(1000, PriorityParams(5))
    assert run(s) == [2, 1, 3]


def test_incremental_round_robin():
    s = Scheduler(INC)
    s.enqueue(2000, PriorityParams(3))
    s.enqueue(3000, PriorityParams(3))
    s.enqueue(1000, PriorityParams(3))
    s.enqueue(1000, PriorityParams(6))
    assert run(s) == [1, 2, 3, 1, 2, 2, 4]


def test_incremental_new_arrival_joins_rotation():
    s = Scheduler(INC)
    s.enqueue(3000, PriorityParams(3))
    s.enqueue(3000, PriorityParams(3))
    s.on_sent(*s.select_next(1000))  # 1
    s.enqueue(1000, PriorityParams(3))
    assert run(s) == [2, 3, 1, 2, 1, 2]


def test_fifo_ignores_urgency():
    s = Scheduler(FIFO)
    s.enqueue(1500, PriorityParams(7))
    s.enqueue(1000, PriorityParams(0))
    assert run(s) == [1, 1, 2]


def test_on_lost_reactivates_with_original_order():
    s = Scheduler(FIFO)
    s.enqueue(1000, PriorityParams())
    s.enqueue(1000, PriorityParams())
    s.on_sent(*s.select_next(1000))
    assert s.active_ids == [2]
    s.on_lost(1, 400)
    assert s.active_ids == [1, 2]
    assert tuple(s.select_next(1000)) == (1, 400)
    with pytest.raises(Overrun):
        s.on_lost(2, 1)
    with pytest.raises(UnknownStream):
        s.on_lost(42, 1)


def test_mode_is_fixed():
    s = Scheduler("urgency-incremental")
    assert s.mode is INC


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(SchedulerMode)))
def test_invariants_hold(seed, mode):
    replay(random_ops(random.Random(seed)), mode)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(SchedulerMode)))
def test_matches_reference(seed, mode):
    ops = random_ops(random.Random(seed))
    assert selections(ops, mode) == reference_selections(ops, mode)
