"""The 4 KB track memory shared by the logging and download processes.

A 12-bit address bus gives 4096 byte cells.  Records are appended at a
write cursor; there is no wraparound.  Access goes through an exclusive
bus owner, standing in for the two-wire bus arbitration between the
processes: whoever holds the bus is the only one that may read or write.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from datetime import timedelta
from fractions import Fraction
from typing import Callable

from .record import RECORD_SIZE, TrackRecord

ADDRESS_BITS = 12
MEMORY_SIZE = 2**ADDRESS_BITS
MAX_RECORDS = MEMORY_SIZE // RECORD_SIZE
IMAGE_MAGIC = b"TRKMEM v1"

_UNPRINTABLE = re.compile(rb"[^\x20-\x7e]")
_NONZERO = re.compile(rb"[^\x00]")

assert MAX_RECORDS == 95 and MAX_RECORDS * RECORD_SIZE == 4085 <= MEMORY_SIZE


class ProcessId(enum.Enum):
    P1 = "P1"
    P2 = "P2"


class BankError(Exception):
    """Base for bank access errors."""


class BusBusy(BankError):
    pass


class NotOwner(BankError):
    pass


class MemoryFull(BankError):
    pass


class OutOfRange(BankError, IndexError):
    pass


class ImageError(ValueError):
    pass


class BadMagic(ImageError):
    pass


class BadCount(ImageError):
    pass


class ZeroRecordSize(ValueError):
    pass


class MemoryBank:
    """4096 cells, a write cursor and one bus owner at a time.

    ``listener``, if given, is called as ``listener(op, owner, arg)`` after
    every successful bus operation (``acquire``, ``release``, ``store``,
    ``read``, ``erase``).  The simulator uses it to log bus traffic.
    """

    def __init__(self, listener: Callable[[str, ProcessId, object], None] | None = None):
        self.cells = bytearray(MEMORY_SIZE)
        self.record_count = 0
        self.bus_owner: ProcessId | None = None
        self.listener = listener

    @property
    def write_cursor(self) -> int:
        return self.record_count * RECORD_SIZE

    @property
    def full(self) -> bool:
        return self.record_count >= MAX_RECORDS

    def _notify(self, op, owner, arg=None):
        if self.listener is not None:
            self.listener(op, owner, arg)

    def _require(self, owner: ProcessId):
        if self.bus_owner is None:
            raise NotOwner("%s does not hold the bus" % owner.value)
        if self.bus_owner is not owner:
            raise BusBusy("bus held by %s, %s refused" % (self.bus_owner.value, owner.value))

    def acquire(self, owner: ProcessId):
        if self.bus_owner is not None and self.bus_owner is not owner:
            raise BusBusy("bus held by %s, %s refused" % (self.bus_owner.value, owner.value))
        self.bus_owner = owner
        self._notify("acquire", owner)

    def release(self, owner: ProcessId):
        if self.bus_owner is not owner:
            raise NotOwner("%s cannot release a bus held by %s"
                           % (owner.value, self.bus_owner.value if self.bus_owner else "nobody"))
        self.bus_owner = None
        self._notify("release", owner)

    def store_record(self, owner: ProcessId, record: TrackRecord):
        self._require(owner)
        if self.record_count >= MAX_RECORDS:
            raise MemoryFull("all %d record slots used" % MAX_RECORDS)
        start = self.write_cursor
        self.cells[start:start + RECORD_SIZE] = record.data
        self.record_count += 1
        self._notify("store", owner, self.record_count - 1)

    def read_record(self, owner: ProcessId, index: int) -> TrackRecord:
        self._require(owner)
        if not 0 <= index < self.record_count:
            raise OutOfRange("record %d not in [0, %d)" % (index, self.record_count))
        start = index * RECORD_SIZE
        self._notify("read", owner, index)
        return TrackRecord(bytes(self.cells[start:start + RECORD_SIZE]))

    def erase(self, owner: ProcessId):
        """Zero every cell and rewind the cursor."""
        self._require(owner)
        self.cells[:] = bytes(MEMORY_SIZE)
        self.record_count = 0
        self._notify("erase", owner)

    def records(self) -> list[bytes]:
        """Raw stored records, bypassing the bus.  For inspection only."""
        return [bytes(self.cells[i * RECORD_SIZE:(i + 1) * RECORD_SIZE]) for i in range(self.record_count)]

    def torn_slots(self) -> list[int]:
        """Slots that are neither fully written nor all zero.

        Slots below ``record_count`` must hold a complete printable record;
        everything above the cursor must be zero.
        """
        data = bytes(self.cells)
        used = self.record_count * RECORD_SIZE
        bad = {m.start() // RECORD_SIZE for m in _UNPRINTABLE.finditer(data, 0, used)}
        bad.update(min(m.start() // RECORD_SIZE, MAX_RECORDS) for m in _NONZERO.finditer(data, used))
        return sorted(bad)

    def __eq__(self, other):
        if not isinstance(other, MemoryBank):
            return NotImplemented
        return (self.cells == other.cells and self.record_count == other.record_count
                and self.bus_owner == other.bus_owner)

    def __repr__(self):
        owner = self.bus_owner.value if self.bus_owner else None
        return "MemoryBank(count=%d, cursor=%d, owner=%s)" % (self.record_count, self.write_cursor, owner)


# -- images ------------------------------------------------------------------


def dump_image(bank: MemoryBank) -> bytes:
    return b"%s count=%d\n" % (IMAGE_MAGIC, bank.record_count) + bytes(bank.cells)


def load_image(data: bytes) -> MemoryBank:
    nl = data.find(b"\n")
    header = data[:nl] if nl >= 0 else data
    if not header.startswith(IMAGE_MAGIC + b" "):
        raise BadMagic("missing %r header" % IMAGE_MAGIC.decode())
    key, _, value = header[len(IMAGE_MAGIC) + 1:].partition(b"=")
    if key != b"count" or not value.isdigit():
        raise BadCount("unreadable count in header %r" % header.decode("ascii", "replace"))
    count = int(value)
    if count > MAX_RECORDS:
        raise BadCount("count %d exceeds %d" % (count, MAX_RECORDS))
    body = data[nl + 1:] if nl >= 0 else b""
    if len(body) != MEMORY_SIZE:
        raise BadCount("image body is %d bytes, expected %d" % (len(body), MEMORY_SIZE))
    bank = MemoryBank()
    bank.cells[:] = body
    bank.record_count = count
    return bank


def hexdump(data: bytes, width: int = 16) -> str:
    lines = []
    for off in range(0, len(data), width):
        chunk = data[off:off + width]
        hexpart = " ".join("%02x" % b for b in chunk)
        text = "".join(chr(b) if 0x20 <= b < 0x7F else "." for b in chunk)
        lines.append("%08x  %-*s  |%s|" % (off, width * 3 - 1, hexpart, text))
    return "\n".join(lines)


# -- capacity arithmetic -----------------------------------------------------


@dataclass(frozen=True)
class CapacityReport:
    record_size_bits: int
    records_capacity_exact: Fraction
    records_capacity_whole: int
    time_to_full: timedelta


def capacity(mem_bytes: int = MEMORY_SIZE, record_bytes: int = RECORD_SIZE,
             sample_interval: timedelta = timedelta(minutes=2)) -> CapacityReport:
    """How many records fit, and how long sampling takes to fill them.

    >>> r = capacity(4096, 43, timedelta(minutes=2))
    >>> r.records_capacity_whole, r.time_to_full
    (95, datetime.timedelta(seconds=11400))
    """
    if record_bytes <= 0:
        raise ZeroRecordSize("record size must be positive")
    exact = Fraction(mem_bytes, record_bytes)
    whole = exact.numerator // exact.denominator
    return CapacityReport(
        record_size_bits=record_bytes * 8,
        records_capacity_exact=exact,
        records_capacity_whole=whole,
        time_to_full=whole * sample_interval,
    )


def format_duration(td: timedelta) -> str:
    """``timedelta(minutes=190)`` -> ``"3h 10m"``; seconds shown only if present."""
    total = int(td.total_seconds())
    hours, rem = divmod(total, 3600)
    minutes, seconds = divmod(rem, 60)
    text = "%dh %dm" % (hours, minutes)
    if seconds:
        text += " %ds" % seconds
    return text
