"""Discrete-event kernel: integer virtual clock, (time, id) ordered queue, seeded streams."""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .errors import PastTime


class EventKind(str, Enum):
    PACKET_ARRIVAL = "packet-arrival"
    TIMER = "timer"
    PROBE = "probe"
    TRAFFIC_EMIT = "traffic-emit"


@dataclass(order=True)
class Event:
    time: int
    id: int
    target: str = field(compare=False)
    kind: EventKind = field(compare=False)
    payload: Any = field(default=None, compare=False)


@dataclass(frozen=True)
class KernelStats:
    events_executed: int
    clock: int


def stream_seed(master_seed: int, label: str) -> int:
    """Stable 64-bit seed for a labelled stream (blake2b over seed and label)."""
    digest = hashlib.blake2b(f"{master_seed}\x00{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class RngStream:
    """Named random stream; Mersenne Twister seeded from ``stream_seed``."""

    def __init__(self, master_seed: int, label: str):
        self.label = label
        self.seed = stream_seed(master_seed, label)
        self._gen = random.Random(self.seed)

    def random(self) -> float:
        return self._gen.random()

    def bernoulli(self, p: float) -> bool:
        return self._gen.random() < p

    def __repr__(self) -> str:
        return f"RngStream({self.label!r}, seed={self.seed:#018x})"


def rng_stream(master_seed: int, label: str) -> RngStream:
    return RngStream(master_seed, label)


Handler = Callable[[Event], None]


class Kernel:
    """Single-threaded event loop.

    Events at equal times run in scheduling order because ids are issued
    monotonically and the heap orders on ``(time, id)``.
    """

    def __init__(self, master_seed: int = 0):
        self.master_seed = master_seed
        self.clock = 0
        self._queue: list[Event] = []
        self._next_id = 0
        self._handlers: dict[EventKind, Handler] = {}
        self._streams: dict[str, RngStream] = {}
        self.executed = 0
        self.trace: list[tuple[int, int, str, str]] = []

    def on(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def rng(self, label: str) -> RngStream:
        stream = self._streams.get(label)
        if stream is None:
            stream = self._streams[label] = RngStream(self.master_seed, label)
        return stream

    def schedule(self, kind: EventKind, target: str, time: int, payload: Any = None) -> int:
        if time < self.clock:
            raise PastTime(f"cannot schedule at t={time} < clock {self.clock}")
        event = Event(int(time), self._next_id, target, EventKind(kind), payload)
        self._next_id += 1
        heapq.heappush(self._queue, event)
        return event.id

    @property
    def pending(self) -> int:
        return len(self._queue)

    def peek_time(self) -> int | None:
        return self._queue[0].time if self._queue else None

    def run(self, until: int | None = None) -> KernelStats:
        executed = 0
        while self._queue:
            if until is not None and self._queue[0].time > until:
                break
            event = heapq.heappop(self._queue)
            self.clock = event.time
            self.trace.append((event.time, event.id, event.target, event.kind.value))
            handler = self._handlers.get(event.kind)
            if handler is not None:
                handler(event)
            executed += 1
        if self._queue and until is not None:
            self.clock = max(self.clock, until)
        self.executed += executed
        return KernelStats(executed, self.clock)
