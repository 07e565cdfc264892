"""NMEA 0183 sentence scanning and parsing.

Only two sentence types carry data we keep: RMC (time, validity, position,
speed, date) and GGA (fix quality, satellites, altitude).  Everything else
is classified and otherwise ignored.

Sentences are read positionally.  Empty fields keep their slot, so
``",,"`` never shifts a later field::

    $GPRMC,161229.487,A,3723.2475,N,12158.3416,W,0.13,309.62,120598,,*10
     [0]   [1]        [2][3]      [4][5]       [6][7] [8]    [9]    ...
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

MAX_LINE = 128
TERMINATORS = b"\r\n"

_TIME_RE = re.compile(r"\d{6}\.\d{3}", re.ASCII)
_LAT_RE = re.compile(r"\d{4}\.\d{4}", re.ASCII)
_LON_RE = re.compile(r"\d{5}\.\d{4}", re.ASCII)
_DATE_RE = re.compile(r"\d{6}", re.ASCII)
_DECIMAL_RE = re.compile(r"\d+(\.\d*)?|\.\d+", re.ASCII)
_SIGNED_DECIMAL_RE = re.compile(r"-?(\d+(\.\d*)?|\.\d+)", re.ASCII)
_INT_RE = re.compile(r"\d+", re.ASCII)
# all fix fields at once, joined by commas; the common case skips the per-field checks
_FIX_RE = re.compile(r"\d{6}\.\d{3},\d{4}\.\d{4},[NS],\d{5}\.\d{4},[EW],(\d+(\.\d*)?|\.\d+),\d{6}", re.ASCII)
_HEX2_RE = re.compile(rb"[0-9A-Fa-f]{2}")
_UNPRINTABLE_RE = re.compile(rb"[^\x20-\x7e]")


class NmeaError(ValueError):
    pass


class MalformedLine(NmeaError):
    pass


class OversizeLine(NmeaError):
    def __init__(self, msg="line exceeds %d bytes" % MAX_LINE, state=None):
        super().__init__(msg)
        self.state = state


class FieldCount(NmeaError):
    pass


class BadHemisphere(NmeaError):
    pass


class BadPattern(NmeaError):
    def __init__(self, msg, field=None):
        super().__init__(msg)
        self.field = field


class MessageClass(enum.Enum):
    GlobalPositioningFix = "GGA"
    GeographicPosition = "GLL"
    DopActiveSatellites = "GSA"
    SatellitesInView = "GSV"
    RecommendedMinimum = "RMC"
    CourseOverGround = "VTG"
    BeaconSignal = "MSS"
    PpsTiming = "ZDA"
    Other = "?"


def classify(type_tag: str) -> MessageClass:
    """Map a type tag such as ``"GPZDA"`` to its message class."""
    suffix = type_tag[-3:]
    for cls in MessageClass:
        if cls.value == suffix and cls is not MessageClass.Other:
            return cls
    return MessageClass.Other


@dataclass(frozen=True)
class NmeaSentence:
    raw: bytes
    type_tag: str
    fields: tuple[str, ...]
    checksum_claimed: int | None = None

    @property
    def payload(self) -> bytes:
        """Bytes strictly between ``$`` and ``*`` (or end of line)."""
        star = self.raw.find(b"*")
        return self.raw[1:] if star < 0 else self.raw[1:star]

    @property
    def data_fields(self) -> tuple[str, ...]:
        return self.fields[1:]


def tokenize(line: bytes | str) -> NmeaSentence:
    """Split one NMEA line (without its terminator) into fields.

    Raises:
        MalformedLine: no leading ``$``, a non-printable byte, more than one
            ``*``, or a checksum that is not two hex digits.
    """
    if isinstance(line, str):
        try:
            line = line.encode("ascii")
        except UnicodeEncodeError as exc:
            raise MalformedLine("non-ASCII character in line") from exc
    line = bytes(line)
    if not line.startswith(b"$"):
        raise MalformedLine("line does not start with '$'")
    bad = _UNPRINTABLE_RE.search(line)
    if bad:
        raise MalformedLine("non-printable byte 0x%02X" % bad.group()[0])
    if line.count(b"$") > 1:
        raise MalformedLine("more than one '$'")
    stars = line.count(b"*")
    if stars > 1:
        raise MalformedLine("more than one '*'")
    claimed = None
    body = line[1:]
    if stars == 1:
        body, tail = body.split(b"*")
        if not _HEX2_RE.fullmatch(tail):
            raise MalformedLine("checksum %r is not two hex digits" % tail.decode())
        claimed = int(tail, 16)
    fields = tuple(body.decode("ascii").split(","))
    if not fields[0]:
        raise MalformedLine("empty type tag")
    return NmeaSentence(raw=line, type_tag=fields[0], fields=fields, checksum_claimed=claimed)


def checksum(payload: bytes | str) -> int:
    if isinstance(payload, str):
        payload = payload.encode("ascii")
    # XOR of all bytes: fold the payload, read as one big integer, in halves
    acc, n = int.from_bytes(payload, "big"), len(payload)
    while n > 1:
        half = n // 2
        acc = (acc >> (8 * half)) ^ (acc & ((1 << (8 * half)) - 1))
        n -= half
    return acc


def verify_checksum(sentence: NmeaSentence) -> bool:
    if sentence.checksum_claimed is None:
        return False
    return checksum(sentence.payload) == sentence.checksum_claimed


# -- field parsing -----------------------------------------------------------


@dataclass(frozen=True)
class GpsFix:
    time_utc: str
    latitude: str
    lat_hemi: str
    longitude: str
    lon_hemi: str
    speed_knots: str
    date: str
    valid: bool = True

    def __post_init__(self):
        joined = ",".join((self.time_utc, self.latitude, self.lat_hemi, self.longitude,
                           self.lon_hemi, self.speed_knots, self.date))
        if _FIX_RE.fullmatch(joined):
            return
        _check(_TIME_RE, self.time_utc, "time", 1)
        _check(_LAT_RE, self.latitude, "latitude", 3)
        _check_hemi(self.lat_hemi, "NS")
        _check(_LON_RE, self.longitude, "longitude", 5)
        _check_hemi(self.lon_hemi, "EW")
        _check(_DECIMAL_RE, self.speed_knots, "speed", 7)
        _check(_DATE_RE, self.date, "date", 9)


@dataclass(frozen=True)
class GgaInfo:
    time_utc: str
    latitude: str
    lat_hemi: str
    longitude: str
    lon_hemi: str
    quality: int
    num_satellites: int
    hdop: str
    altitude_m: str

    def __post_init__(self):
        if self.quality < 0 or self.num_satellites < 0:
            raise BadPattern("quality and satellite count must be non-negative")


def _check(pattern, value, name, field):
    if not pattern.fullmatch(value):
        raise BadPattern("%s %r does not match %s" % (name, value, pattern.pattern), field=field)


def _check_hemi(value, allowed):
    if len(value) != 1 or value not in allowed:
        raise BadHemisphere("hemisphere %r not in %s" % (value, "/".join(allowed)))


def _int_field(value, name, field):
    _check(_INT_RE, value, name, field)
    return int(value)


def parse_rmc(sentence: NmeaSentence) -> GpsFix:
    """Extract the stored parameters from an RMC sentence.

    Course over ground (field 8) and magnetic variation are read past but
    not kept.
    """
    f = sentence.fields
    if len(f) - 1 < 10:
        raise FieldCount("RMC needs 10 data fields, got %d" % (len(f) - 1))
    return GpsFix(
        time_utc=f[1],
        latitude=f[3],
        lat_hemi=f[4],
        longitude=f[5],
        lon_hemi=f[6],
        speed_knots=f[7],
        date=f[9],
        valid=f[2] == "A",
    )


def parse_gga(sentence: NmeaSentence) -> GgaInfo:
    f = sentence.fields
    if len(f) - 1 < 9:
        raise FieldCount("GGA needs 9 data fields, got %d" % (len(f) - 1))
    _check(_TIME_RE, f[1], "time", 1)
    _check(_LAT_RE, f[2], "latitude", 2)
    _check_hemi(f[3], "NS")
    _check(_LON_RE, f[4], "longitude", 4)
    _check_hemi(f[5], "EW")
    quality = _int_field(f[6], "quality", 6)
    sats = _int_field(f[7], "satellites", 7)
    if f[8]:
        _check(_DECIMAL_RE, f[8], "hdop", 8)
    if f[9]:
        _check(_SIGNED_DECIMAL_RE, f[9], "altitude", 9)
    return GgaInfo(
        time_utc=f[1],
        latitude=f[2],
        lat_hemi=f[3],
        longitude=f[4],
        lon_hemi=f[5],
        quality=quality,
        num_satellites=sats,
        hdop=f[8],
        altitude_m=f[9],
    )


def _frame(body: str) -> bytes:
    return b"$%s*%02X\r\n" % (body.encode("ascii"), checksum(body))


def render_rmc(fix: GpsFix, course: str = "0.00") -> bytes:
    """Render a fix as a complete RMC line, checksum and CRLF included."""
    body = ",".join(
        [
            "GPRMC",
            fix.time_utc,
            "A" if fix.valid else "V",
            fix.latitude,
            fix.lat_hemi,
            fix.longitude,
            fix.lon_hemi,
            fix.speed_knots,
            course,
            fix.date,
            "",
            "",
        ]
    )
    return _frame(body)


def render_gga(info: GgaInfo) -> bytes:
    body = ",".join(
        [
            "GPGGA",
            info.time_utc,
            info.latitude,
            info.lat_hemi,
            info.longitude,
            info.lon_hemi,
            str(info.quality),
            "%02d" % info.num_satellites,
            info.hdop,
            info.altitude_m,
            "M",
            "",
            "",
            "",
            "0000",
        ]
    )
    return _frame(body)


# -- incremental scanning ----------------------------------------------------


@dataclass(frozen=True)
class MatchEvent:
    kind: str  # "RMC" or "GGA"
    sentence: NmeaSentence


@dataclass(frozen=True)
class ScannerState:
    buffer: bytes | None = None  # None: between lines, waiting for '$'


def _match(line: bytes) -> MatchEvent | None:
    try:
        sentence = tokenize(line)
    except MalformedLine:
        return None
    for kind in ("RMC", "GGA"):
        if kind in sentence.type_tag:
            return MatchEvent(kind, sentence)
    return None


def scan_stream(next_byte: int, state: ScannerState) -> tuple[ScannerState, MatchEvent | None]:
    """Advance the scanner by one byte.

    Returns the new state and, when the byte completes an RMC or GGA line,
    the match.  A line longer than ``MAX_LINE`` bytes raises
    :class:`OversizeLine`; its ``state`` attribute is the reset scanner to
    continue from.
    """
    buf = state.buffer
    if next_byte == 0x24:  # '$' always starts a fresh line
        return ScannerState(b"$"), None
    if buf is None:
        return state, None
    if next_byte in TERMINATORS:
        return ScannerState(), _match(buf)
    if len(buf) >= MAX_LINE:
        raise OversizeLine(state=ScannerState())
    return ScannerState(buf + bytes((next_byte,))), None


_STOP_RE = re.compile(rb"[\r\n$]")


class NmeaScanner:
    """Chunked equivalent of :func:`scan_stream`.

    ``feed`` accepts any number of bytes and returns every match (and
    :class:`OversizeLine` instance) in stream order.  Results are identical
    to feeding the same bytes one at a time.
    """

    def __init__(self):
        self._buf: bytearray | None = None

    @property
    def collecting(self) -> bool:
        return self._buf is not None

    def reset(self):
        self._buf = None

    def feed(self, data: bytes) -> list[MatchEvent | OversizeLine]:
        out: list[MatchEvent | OversizeLine] = []
        pos, n = 0, len(data)
        while pos < n:
            if self._buf is None:
                start = data.find(b"$", pos)
                if start < 0:
                    break
                self._buf = bytearray(b"$")
                pos = start + 1
                continue
            m = _STOP_RE.search(data, pos)
            end = m.start() if m else n
            room = MAX_LINE - len(self._buf)
            if end - pos > room:
                # the byte after the room runs out triggers the reset
                out.append(OversizeLine())
                self._buf = None
                pos += room + 1
                continue
            self._buf += data[pos:end]
            if m is None:
                break
            if data[end] == 0x24:
                self._buf = bytearray(b"$")
            else:
                event = _match(bytes(self._buf))
                self._buf = None
                if event is not None:
                    out.append(event)
            pos = end + 1
        return out
