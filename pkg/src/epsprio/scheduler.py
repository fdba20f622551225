"""Quantum-by-quantum stream selection.

A :class:`Scheduler` owns the set of active response streams and answers one
question per quantum: which stream sends next, and how many bytes. Three
modes are supported:

``SEQUENTIAL_FIFO``
    Oldest active stream first, urgency ignored (stock server behaviour).
``URGENCY_NON_INCREMENTAL``
    Most urgent class first; inside the class one stream is served to
    completion before the next. A strictly more urgent stream preempts at
    the next quantum boundary.
``URGENCY_INCREMENTAL``
    Most urgent class first; round-robin over arrival order inside the class.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .priority import MAX_URGENCY, PriorityParams

DEFAULT_QUANTUM = 1200


class SchedulerMode(enum.Enum):
    SEQUENTIAL_FIFO = "fifo"
    URGENCY_NON_INCREMENTAL = "urgency"
    URGENCY_INCREMENTAL = "urgency-incremental"


class UnknownStream(KeyError):
    pass


class Overrun(ValueError):
    pass


@dataclass
class StreamEntry:
    id: int
    params: PriorityParams
    bytes_total: int
    bytes_remaining: int
    arrival_seq: int


class Grant(NamedTuple):
    stream_id: int
    granted_bytes: int


class Scheduler:
    """Single-threaded selection state machine.

    Stream ids are issued in arrival order starting at 1, so
    ``arrival_seq == id - 1``.
    """

    def __init__(self, mode: SchedulerMode = SchedulerMode.URGENCY_NON_INCREMENTAL) -> None:
        self.mode = SchedulerMode(mode)
        self._next_seq = 0
        # insertion-ordered: first key is the oldest active stream
        self._active: dict[int, StreamEntry] = {}
        self._finished: dict[int, StreamEntry] = {}
        # per urgency level, sorted arrival_seqs of active streams
        self._buckets: list[list[int]] = [[] for _ in range(MAX_URGENCY + 1)]
        self._current: Optional[int] = None
        self._rr_last: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._active)

    @property
    def active_ids(self) -> list[int]:
        return sorted(self._active)

    def entry(self, stream_id: int) -> StreamEntry:
        try:
            return self._active[stream_id]
        except KeyError:
            raise UnknownStream(stream_id) from None

    def enqueue(self, size_bytes: int, params: PriorityParams = PriorityParams()) -> int:
        if size_bytes <= 0:
            raise ValueError(f"size_bytes must be positive, got {size_bytes}")
        seq = self._next_seq
        self._next_seq += 1
        entry = StreamEntry(seq + 1, params, size_bytes, size_bytes, seq)
        self._activate(entry)
        return entry.id

    def _activate(self, entry: StreamEntry) -> None:
        # ids only ever grow, but a reactivated stream must keep its arrival
        # position, so rebuild the ordered dict when it would land out of order
        if self._active and entry.id < next(reversed(self._active)):
            self._active[entry.id] = entry
            self._active = dict(sorted(self._active.items()))
        else:
            self._active[entry.id] = entry
        bisect.insort(self._buckets[entry.params.urgency], entry.arrival_seq)

    def _deactivate(self, entry: StreamEntry) -> None:
        del self._active[entry.id]
        bucket = self._buckets[entry.params.urgency]
        del bucket[bisect.bisect_left(bucket, entry.arrival_seq)]
        if self._current == entry.id:
            self._current = None

    def _min_urgency_bucket(self) -> list[int]:
        for bucket in self._buckets:
            if bucket:
                return bucket
        raise AssertionError("no active streams")

    def _pick(self) -> StreamEntry:
        if self.mode is SchedulerMode.SEQUENTIAL_FIFO:
            return self._active[next(iter(self._active))]

        bucket = self._min_urgency_bucket()
        if self.mode is SchedulerMode.URGENCY_NON_INCREMENTAL:
            current = self._active.get(self._current) if self._current is not None else None
            if current is not None and self._buckets[current.params.urgency] is bucket:
                return current
            chosen = self._active[bucket[0] + 1]
            self._current = chosen.id
            return chosen

        urgency = self._active[bucket[0] + 1].params.urgency
        last = self._rr_last.get(urgency, -1)
        i = bisect.bisect_right(bucket, last)
        seq = bucket[i] if i < len(bucket) else bucket[0]
        self._rr_last[urgency] = seq
        return self._active[seq + 1]

    def select_next(self, quantum_bytes: int = DEFAULT_QUANTUM) -> Optional[Grant]:
        """Choose the stream for the next quantum, or ``None`` when idle."""
        if quantum_bytes <= 0:
            raise ValueError(f"quantum_bytes must be positive, got {quantum_bytes}")
        if not self._active:
            return None
        entry = self._pick()
        return Grant(entry.id, min(quantum_bytes, entry.bytes_remaining))

    def on_sent(self, stream_id: int, nbytes: int) -> bool:
        """Record ``nbytes`` sent on a stream; return True when it completed."""
        entry = self.entry(stream_id)
        if nbytes <= 0:
            raise ValueError(f"bytes must be positive, got {nbytes}")
        if nbytes > entry.bytes_remaining:
            raise Overrun(f"stream {stream_id}: {nbytes} > {entry.bytes_remaining} remaining")
        entry.bytes_remaining -= nbytes
        if entry.bytes_remaining == 0:
            self._deactivate(entry)
            self._finished[stream_id] = entry
            return True
        return False

    def on_lost(self, stream_id: int, nbytes: int) -> None:
        """Return previously sent bytes to a stream for retransmission.

        A stream that had already completed becomes active again with its
        original arrival order and params.
        """
        entry = self._active.get(stream_id)
        if entry is None:
            entry = self._finished.pop(stream_id, None)
            if entry is None:
                raise UnknownStream(stream_id)
            reactivate = True
        else:
            reactivate = False
        if nbytes <= 0 or entry.bytes_remaining + nbytes > entry.bytes_total:
            raise Overrun(f"stream {stream_id}: cannot return {nbytes} bytes")
        entry.bytes_remaining += nbytes
        if reactivate:
            self._activate(entry)

    def reprioritize(self, stream_id: int, params: PriorityParams) -> None:
        entry = self.entry(stream_id)
        if params.urgency != entry.params.urgency:
            current = self._current
            self._deactivate(entry)
            entry.params = params
            self._activate(entry)
            self._current = current
        else:
            entry.params = params
