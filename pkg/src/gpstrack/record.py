"""Fixed-width 43-byte track records.

Byte layout (all printable ASCII)::

    [0..10)  time       hhmmss.sss
    [10..19) latitude   ddmm.mmmm
    [19]     lat hemi   N/S
    [20..30) longitude  dddmm.mmmm
    [30]     lon hemi   E/W
    [31..37) speed      knots, left-justified, space padded
    [37..43) date       ddmmyy
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .nmea import BadPattern, GpsFix, NmeaError

FIELDS = (
    ("time_utc", 0, 10),
    ("latitude", 10, 19),
    ("lat_hemi", 19, 20),
    ("longitude", 20, 30),
    ("lon_hemi", 30, 31),
    ("speed_knots", 31, 37),
    ("date", 37, 43),
)
RECORD_SIZE = 43
RECORD_BITS = 344
SPEED_WIDTH = 6

assert RECORD_SIZE * 8 == RECORD_BITS
assert sum(end - start for _, start, end in FIELDS) == RECORD_SIZE


class SpeedOverflow(NmeaError):
    pass


@dataclass(frozen=True)
class TrackRecord:
    data: bytes

    def __post_init__(self):
        if len(self.data) != RECORD_SIZE:
            raise ValueError("track record must be %d bytes, got %d" % (RECORD_SIZE, len(self.data)))

    def __bytes__(self):
        return self.data


def encode(fix: GpsFix) -> TrackRecord:
    if len(fix.speed_knots) > SPEED_WIDTH:
        raise SpeedOverflow("speed %r wider than %d characters" % (fix.speed_knots, SPEED_WIDTH))
    text = "".join(
        [
            fix.time_utc,
            fix.latitude,
            fix.lat_hemi,
            fix.longitude,
            fix.lon_hemi,
            fix.speed_knots.ljust(SPEED_WIDTH),
            fix.date,
        ]
    )
    return TrackRecord(text.encode("ascii"))


def decode(record: TrackRecord | bytes) -> GpsFix:
    """Inverse of :func:`encode`.  Stored fixes are always valid ones."""
    data = bytes(record)
    if len(data) != RECORD_SIZE:
        raise BadPattern("record must be %d bytes, got %d" % (RECORD_SIZE, len(data)))
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise BadPattern("non-ASCII byte in record") from exc
    values = {name: text[start:end] for name, start, end in FIELDS}
    # Only trailing padding is legal; anything else fails the decimal check.
    values["speed_knots"] = values["speed_knots"].rstrip(" ")
    return GpsFix(valid=True, **values)


def normalize(fix: GpsFix) -> GpsFix:
    """What a fix looks like after a trip through memory."""
    return replace(fix, valid=True)
