"""Simulated V2V message layer.

Messages travel over directed links with a constant per-link delay. An
optional range gate drops a message at send time when the two endpoints are
farther apart than ``range_limit``. Delivery is scheduled: ``deliver_due``
hands back everything whose delivery time has been reached.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

DEFAULT_RANGE = 300.0

# Tick times are k * dt and delivery times are sent_at + delay; the two are
# not bit-identical in binary floating point (0.01 * 110 != 1.0 + 0.1), so the
# "deliver_at <= now" comparison allows this much slack.
TIME_EPS = 1e-9


@dataclass(frozen=True)
class KinematicMessage:
    sender_id: int
    position: tuple[float, float, float]
    yaw: float
    speed: float
    accel: float
    sent_at: float

    def __post_init__(self) -> None:
        values = (*self.position, self.yaw, self.speed, self.accel, self.sent_at)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"message from {self.sender_id} has non-finite fields")
        if self.sent_at < 0:
            raise ValueError("sent_at must be >= 0")


@dataclass(frozen=True)
class Delivery:
    deliver_at: float
    src: int
    dst: int
    message: KinematicMessage


@dataclass
class NetworkModel:
    links: frozenset[tuple[int, int]]
    delay: float = 0.0
    range_limit: float | None = None
    link_delays: dict[tuple[int, int], float] = field(default_factory=dict)
    in_flight: list[tuple[float, int, int, KinematicMessage]] = field(default_factory=list)
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    _seq: itertools.count = field(default_factory=itertools.count, repr=False, compare=False)
    _clock: float = field(default=-math.inf, repr=False)

    def __post_init__(self) -> None:
        self.links = frozenset(self.links)
        for src, dst in self.links:
            if src == dst:
                raise ValueError(f"self-link {src} -> {dst} is not allowed")
        if self.delay < 0 or any(d < 0 for d in self.link_delays.values()):
            raise ValueError("link delays must be >= 0")
        unknown = set(self.link_delays) - self.links
        if unknown:
            raise ValueError(f"delay override for unknown links: {sorted(unknown)}")
        if self.range_limit is not None and self.range_limit < 0:
            raise ValueError("range_limit must be >= 0")

    def link_delay(self, src: int, dst: int) -> float:
        return self.link_delays.get((src, dst), self.delay)

    def outgoing(self, src: int) -> list[int]:
        return sorted(dst for s, dst in self.links if s == src)

    def incoming(self, dst: int) -> list[int]:
        return sorted(src for src, d in self.links if d == dst)

    def send(
        self,
        src_id: int,
        msg: KinematicMessage,
        now: float,
        positions: Mapping[int, tuple[float, float]],
    ) -> int:
        """Queue ``msg`` on every outgoing link of ``src_id``.

        Links whose endpoints are beyond the range gate drop the message.
        Returns the number of copies queued.
        """
        if msg.sent_at != now:
            raise ValueError(f"message sent_at {msg.sent_at} does not match now {now}")
        queued = 0
        for dst in self.outgoing(src_id):
            if self.range_limit is not None:
                (x1, y1), (x2, y2) = positions[src_id], positions[dst]
                if math.hypot(x2 - x1, y2 - y1) > self.range_limit:
                    self.dropped += 1
                    continue
            deliver_at = now + self.link_delay(src_id, dst)
            heapq.heappush(self.in_flight, (deliver_at, next(self._seq), dst, msg))
            self.sent += 1
            queued += 1
        return queued

    def deliver_due(self, now: float) -> list[tuple[int, KinematicMessage]]:
        """Pop every message due at or before ``now``, earliest first."""
        if now < self._clock:
            raise ValueError(f"clock moved backwards: {now} < {self._clock}")
        self._clock = now
        due = []
        while self.in_flight and self.in_flight[0][0] <= now + TIME_EPS:
            _, _, dst, msg = heapq.heappop(self.in_flight)
            due.append((dst, msg))
        self.delivered += len(due)
        return due

    def pending(self) -> list[Delivery]:
        return [Delivery(t, m.sender_id, dst, m) for t, _, dst, m in sorted(self.in_flight)]


def build_precedent_topology(vehicle_ids: Sequence[int], delay: float = 0.0) -> NetworkModel:
    """Chain topology: each vehicle hears only the one directly ahead of it.

    ``vehicle_ids`` is ordered front to back.
    """
    ids = list(vehicle_ids)
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate vehicle ids: {ids}")
    if len(ids) < 2:
        raise ValueError("a precedent topology needs at least two vehicles")
    return NetworkModel(links=frozenset(zip(ids, ids[1:])), delay=delay)


def build_ego_topology(
    vehicle_ids: Iterable[int],
    ego_id: int,
    range_limit: float = DEFAULT_RANGE,
    delay: float = 0.0,
) -> NetworkModel:
    """Every other vehicle sends to the ego; the ego sends nothing."""
    ids = list(vehicle_ids)
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate vehicle ids: {ids}")
    if ego_id not in ids:
        raise ValueError(f"ego id {ego_id} is not among the vehicles {ids}")
    links = frozenset((v, ego_id) for v in ids if v != ego_id)
    return NetworkModel(links=links, delay=delay, range_limit=range_limit)
