"""Byte-level radio link between the base station and the mobile units.

Bytes are clocked as 10-bit UART frames (start, 8 data, stop) at 9600 bps,
so one byte occupies 1/960 s of channel time, rounded to 1042 us.  The
downlink is a broadcast from the base station.  The uplink is shared:
two unit transmissions that overlap in time garble each other and neither
is delivered.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

BAUD = 9600
BITS_PER_BYTE = 10
BYTE_TIME_US = round(1_000_000 * BITS_PER_BYTE / BAUD)
BASE = "bs"


class Direction(enum.Enum):
    Downlink = "down"
    Uplink = "up"


@dataclass
class ChannelConfig:
    byte_time: int = BYTE_TIME_US
    corruption_rate: float = 0.0
    rng_seed: int = 0
    range_map: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ValueError("corruption_rate must lie in [0, 1]")
        if self.byte_time <= 0:
            raise ValueError("byte_time must be positive")


@dataclass(frozen=True)
class WireEvent:
    time: int
    direction: Direction
    source: str
    byte: int
    corrupted: bool = False

    def format(self) -> str:
        line = "t=%d %s %s 0x%02x" % (self.time, self.direction.value, self.source, self.byte)
        return line + " corrupt" if self.corrupted else line


@dataclass
class Transmission:
    source: str
    direction: Direction
    start: int
    data: bytes  # as it arrives, corruption applied
    corrupted: tuple[bool, ...]
    byte_time: int
    in_range: bool = True
    collided: bool = False
    end: int = field(init=False)

    def __post_init__(self):
        self.end = self.start + len(self.data) * self.byte_time

    @property
    def delivered(self) -> bool:
        return self.in_range and not self.collided

    def overlaps(self, other: Transmission) -> bool:
        return self.start < other.end and other.start < self.end

    def wire_events(self) -> list[WireEvent]:
        return [
            WireEvent(self.start + i * self.byte_time, self.direction, self.source, b,
                      self.corrupted[i] or self.collided)
            for i, b in enumerate(self.data)
        ]


def source_name(unit_id) -> str:
    return BASE if unit_id == BASE else "u%d" % unit_id


class Channel:
    """Schedules transmissions and decides what reaches the other side."""

    def __init__(self, config: ChannelConfig):
        self.config = config
        self.rng = random.Random(config.rng_seed)
        self._uplink: list[Transmission] = []

    def in_range(self, source) -> bool:
        return source == BASE or bool(self.config.range_map.get(source, False))

    def _corrupt(self, data: bytes) -> tuple[bytes, tuple[bool, ...]]:
        rate = self.config.corruption_rate
        if rate == 0.0:
            return bytes(data), (False,) * len(data)
        out = bytearray(data)
        mask = []
        for i, b in enumerate(data):
            hit = self.rng.random() < rate
            if hit:
                out[i] = b ^ self.rng.randrange(1, 256)
            mask.append(hit)
        return bytes(out), tuple(mask)

    def transmit(self, source, data: bytes, at: int) -> Transmission:
        direction = Direction.Downlink if source == BASE else Direction.Uplink
        payload, mask = self._corrupt(data)
        tx = Transmission(source_name(source), direction, at, payload, mask,
                          self.config.byte_time, in_range=self.in_range(source))
        if direction is Direction.Uplink and tx.in_range:
            for other in self._uplink:
                if other.source != tx.source and other.overlaps(tx):
                    other.collided = tx.collided = True
            self._uplink.append(tx)
        return tx

    def forget_before(self, t: int):
        """Drop uplink history that can no longer overlap anything at ``t``."""
        self._uplink = [tx for tx in self._uplink if tx.end > t]

    def send(self, source, data: bytes, at: int) -> list[WireEvent]:
        return self.transmit(source, data, at).wire_events()


@dataclass(frozen=True)
class Delivery:
    unit_id: int
    start: int
    end: int
    collided: bool


def arbitrate(config: ChannelConfig, competing, length: int = 1) -> list[Delivery]:
    """Order competing uplink transmissions of ``length`` bytes each.

    ``competing`` holds ``(unit_id, scheduled_time)`` pairs.  Transmissions
    that overlap in time are all marked collided.
    """
    span = length * config.byte_time
    ordered = sorted(competing, key=lambda c: (c[1], c[0]))
    hit = [False] * len(ordered)
    for i, (_, t_i) in enumerate(ordered):
        for j in range(i + 1, len(ordered)):
            t_j = ordered[j][1]
            if t_j >= t_i + span:
                break
            hit[i] = hit[j] = True
    return [Delivery(uid, t, t + span, hit[k]) for k, (uid, t) in enumerate(ordered)]


def priority_slot(unit_id: int, slot_unit: int = 10_000) -> int:
    """Delay in microseconds between hearing ``free`` and sending the ID."""
    return unit_id * slot_unit
