"""Discrete-event replay of a manifest over one multiplexed link.

Model, in server-side time (milliseconds):

* The root document request reaches the server at ``one_way_delay_ms``.
* A resource is sent when the scheduler picks it; each quantum occupies the
  link for ``bytes / bandwidth`` and arrives at the client one way-delay
  after it finishes serialising.
* When a resource has fully arrived, the resources it triggers are requested:
  the request leaves the client one half-RTT later and reaches the server one
  further one-way delay after that.
* Every quantum and every request is lost independently with ``loss_rate``
  (separate seeded generators per direction). A lost quantum's bytes return
  to their stream ``2 * one_way_delay_ms`` after it was sent; a lost request
  is resent after the same timeout.

There is no congestion control or flow control; the link is always either
busy or waiting for work. Results are a pure function of the inputs.
"""

from __future__ import annotations

import csv
import heapq
import io
import random
from dataclasses import asdict, dataclass, field
from typing import Optional

from .manifest import WebsiteManifest
from .mapping import MappingStrategy
from .priority import PriorityParams
from .scheduler import DEFAULT_QUANTUM, Scheduler, SchedulerMode

TRACE_CSV_HEADER = ["resource_id", "request_ms", "first_byte_ms", "completion_ms"]


@dataclass(frozen=True)
class LinkModel:
    bandwidth_bytes_per_sec: float = 1_250_000.0
    one_way_delay_ms: float = 10.0
    loss_rate: float = 0.0005
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.bandwidth_bytes_per_sec > 0:
            raise ValueError("bandwidth must be positive")
        if not self.one_way_delay_ms >= 0:
            raise ValueError("one_way_delay_ms must be non-negative")
        if not 0 <= self.loss_rate < 1:
            raise ValueError("loss_rate must be in [0, 1)")
        if not -(2**63) <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @classmethod
    def challenging(cls, **overrides) -> "LinkModel":
        """20 ms one-way delay and 0.1% loss in each direction."""
        return cls(**{"one_way_delay_ms": 20.0, "loss_rate": 0.001, **overrides})

    def transmit_ms(self, nbytes: int) -> float:
        return nbytes * 1000.0 / self.bandwidth_bytes_per_sec

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResourceTiming:
    request_ms: float
    first_byte_ms: float
    completion_ms: float


@dataclass
class DeliveryTrace:
    """Per-resource timings plus every delivered quantum.

    ``request_ms`` is when the request was accepted by the server;
    ``first_byte_ms`` and ``completion_ms`` are client arrival times.
    ``events`` holds ``(arrival_ms, resource_id, bytes)`` for delivered
    quanta only; lost ones are counted in ``lost_quanta``.
    """

    timings: dict[str, ResourceTiming] = field(default_factory=dict)
    events: list[tuple[float, str, int]] = field(default_factory=list)
    lost_quanta: int = 0
    lost_requests: int = 0

    def delivered_bytes(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for _, rid, n in self.events:
            totals[rid] = totals.get(rid, 0) + n
        return totals

    def to_csv(self, order: Optional[list[str]] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_CSV_HEADER)
        for rid in order if order is not None else self.timings:
            t = self.timings[rid]
            w.writerow([rid, repr(t.request_ms), repr(t.first_byte_ms), repr(t.completion_ms)])
        return buf.getvalue()


def assign_priorities(
    manifest: WebsiteManifest,
    strategy: Optional[MappingStrategy],
    mode: SchedulerMode,
) -> dict[str, PriorityParams]:
    """Server-side urgency per resource; ``strategy=None`` is the stock server."""
    incremental = mode is SchedulerMode.URGENCY_INCREMENTAL
    if strategy is None:
        return {r.resource_id: PriorityParams() for r in manifest}
    return {
        r.resource_id: PriorityParams(strategy.urgency(r.chromium_priority, r.rtype, r.size_bytes), incremental)
        for r in manifest
    }


_REQUEST = 0
_RETRANSMIT = 1


def simulate(
    manifest: WebsiteManifest,
    strategy: Optional[MappingStrategy],
    mode: SchedulerMode,
    link: LinkModel = LinkModel(),
    quantum_bytes: int = DEFAULT_QUANTUM,
) -> DeliveryTrace:
    """Replay ``manifest`` and return its delivery trace.

    ``strategy=None`` emulates the stock server, which needs
    ``SchedulerMode.SEQUENTIAL_FIFO``.
    """
    mode = SchedulerMode(mode)
    if strategy is None and mode is not SchedulerMode.SEQUENTIAL_FIFO:
        raise ValueError("the baseline server only supports sequential FIFO delivery")
    if quantum_bytes <= 0:
        raise ValueError("quantum_bytes must be positive")

    params = assign_priorities(manifest, strategy, mode)
    sizes = {r.resource_id: r.size_bytes for r in manifest}
    root = manifest.root.resource_id
    children: dict[str, list[str]] = {r.resource_id: [] for r in manifest}
    for r in manifest:
        if r.resource_id == root:
            continue
        children[r.requested_after or root].append(r.resource_id)

    delay = link.one_way_delay_ms
    rto = 2.0 * delay
    down = random.Random(f"{link.seed}:down")
    up = random.Random(f"{link.seed}:up")

    sched = Scheduler(mode)
    trace = DeliveryTrace()
    stream_rid: dict[int, str] = {}
    requested: dict[str, float] = {}
    first_byte: dict[str, float] = {}
    delivered = {rid: 0 for rid in sizes}

    events: list[tuple[float, int, int, object]] = []
    counter = 0

    def push(t: float, kind: int, payload: object) -> None:
        nonlocal counter
        heapq.heappush(events, (t, counter, kind, payload))
        counter += 1

    push(delay, _REQUEST, root)
    now = 0.0
    while True:
        while events and events[0][0] <= now:
            t, _, kind, payload = heapq.heappop(events)
            if kind == _REQUEST:
                if up.random() < link.loss_rate:
                    trace.lost_requests += 1
                    push(t + rto, _REQUEST, payload)
                    continue
                rid = payload
                requested[rid] = t
                stream_rid[sched.enqueue(sizes[rid], params[rid])] = rid
            else:
                sid, nbytes = payload
                sched.on_lost(sid, nbytes)

        grant = sched.select_next(quantum_bytes)
        if grant is None:
            if not events:
                break
            now = max(now, events[0][0])
            continue

        sid, nbytes = grant
        sched.on_sent(sid, nbytes)
        now += link.transmit_ms(nbytes)
        if down.random() < link.loss_rate:
            trace.lost_quanta += 1
            push(now + rto, _RETRANSMIT, (sid, nbytes))
            continue

        rid = stream_rid[sid]
        arrival = now + delay
        trace.events.append((arrival, rid, nbytes))
        first_byte.setdefault(rid, arrival)
        delivered[rid] += nbytes
        if delivered[rid] == sizes[rid]:
            trace.timings[rid] = ResourceTiming(requested[rid], first_byte[rid], arrival)
            for child in children[rid]:
                push(arrival + 2.0 * delay, _REQUEST, child)

    # manifest order for stable output
    trace.timings = {r.resource_id: trace.timings[r.resource_id] for r in manifest}
    return trace
