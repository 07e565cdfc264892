"""Base station: advertise the channel, grant one unit, verify its download.

Uplink framing, as seen by the station after it grants a unit::

    <43-byte record> * n   0x00   <count, 2 bytes big-endian>

Records always start with an ASCII digit, so the 0x00 sentinel cannot be
mistaken for the first byte of a record.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

from .channel import BYTE_TIME_US
from .effects import Note, StartTimer, Transmit
from .mobile import ACK, BAD, FREE, GOOD
from .nmea import GpsFix, NmeaError
from .record import RECORD_SIZE, TrackRecord, decode

CSV_COLUMNS = ("time", "lat", "lat_hemi", "lon", "lon_hemi", "speed", "date")


class BaseMode(enum.Enum):
    Broadcasting = "Broadcasting"
    Granted = "Granted"
    Receiving = "Receiving"
    Verifying = "Verifying"
    Reporting = "Reporting"


@dataclass
class BaseConfig:
    broadcast_period: int = 100_000
    rx_timeout: int = 1_000_000
    byte_time: int = BYTE_TIME_US


@dataclass
class BaseState:
    mode: BaseMode = BaseMode.Broadcasting
    granted_unit: int | None = None
    received: list = field(default_factory=list)
    claimed_count: int | None = None


@dataclass
class Track:
    unit_id: int
    time: int
    records: list

    @property
    def fixes(self) -> list[GpsFix]:
        return [decode(r) for r in self.records]

    def to_csv(self) -> str:
        return fixes_to_csv(self.fixes)


def fixes_to_csv(fixes) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for f in fixes:
        writer.writerow([f.time_utc, f.latitude, f.lat_hemi, f.longitude, f.lon_hemi, f.speed_knots, f.date])
    return buf.getvalue()


def fixes_from_csv(text: str) -> list[GpsFix]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("track CSV must start with header %s" % ",".join(CSV_COLUMNS))
    return [GpsFix(*row) for row in rows[1:]]


class BaseStation:
    def __init__(self, config: BaseConfig | None = None):
        self.config = config or BaseConfig()
        self.state = BaseState()
        self.tracks: list[Track] = []
        self.grants: list[tuple[int, int]] = []  # (time, unit id)
        self._partial = bytearray()
        self._count: bytearray | None = None
        self._next_mode = BaseMode.Broadcasting
        self._gen = 0

    def _timer(self, at: int, name: str) -> StartTimer:
        self._gen += 1
        return StartTimer(at, (name, self._gen))

    def bs_tick(self, now: int) -> bytes | None:
        """Called every broadcast period; advertises the channel when idle."""
        if self.state.mode is BaseMode.Broadcasting:
            return FREE
        return None

    def _reset_attempt(self):
        self.state.received = []
        self.state.claimed_count = None
        self._partial = bytearray()
        self._count = None

    def on_bytes(self, data: bytes, now: int) -> list:
        out: list = []
        pos, n = 0, len(data)
        while pos < n:
            if (self.state.mode is BaseMode.Receiving and not self._partial
                    and self._count is None and data[pos] != 0):
                # whole-frame fast path
                chunk = data[pos:pos + RECORD_SIZE]
                pos += len(chunk)
                if len(chunk) == RECORD_SIZE:
                    self.state.received.append(TrackRecord(chunk))
                else:
                    self._partial += chunk
                continue
            out.extend(self._byte(data[pos], now))
            pos += 1
        return out + self._refresh(now)

    def bs_on_byte(self, rx: int, now: int) -> list:
        return self._byte(rx, now) + self._refresh(now)

    def _refresh(self, now: int) -> list:
        if self.state.mode in (BaseMode.Granted, BaseMode.Receiving):
            return [self._timer(now + self.config.rx_timeout, "rx_timeout")]
        return []

    def _byte(self, rx: int, now: int) -> list:
        st = self.state
        if st.mode is BaseMode.Broadcasting:
            st.mode = BaseMode.Granted
            st.granted_unit = rx
            self._reset_attempt()
            self.grants.append((now, rx))
            return [Note("grant", "unit=%d" % rx), Transmit(ACK, "ack")]
        if st.mode not in (BaseMode.Granted, BaseMode.Receiving):
            return []
        if self._count is not None:
            self._count.append(rx)
            if len(self._count) == 2:
                return self._verify(now)
        elif self._partial:
            self._partial.append(rx)
            if len(self._partial) == RECORD_SIZE:
                st.received.append(TrackRecord(bytes(self._partial)))
                self._partial = bytearray()
        elif rx == 0:
            self._count = bytearray()
        elif st.mode is BaseMode.Granted and not 0x30 <= rx <= 0x39:
            return [Note("stray_byte", "0x%02x" % rx)]
        else:
            st.mode = BaseMode.Receiving
            self._partial.append(rx)
        return []

    def _verify(self, now: int) -> list:
        st = self.state
        st.mode = BaseMode.Verifying
        st.claimed_count = int.from_bytes(self._count, "big")
        got = len(st.received)
        ok = st.claimed_count == got
        if ok:
            try:
                for r in st.received:
                    decode(r)
            except NmeaError:
                ok = False
        st.mode = BaseMode.Reporting
        report = self._timer(now + len(GOOD) * self.config.byte_time, "report_done")
        if ok:
            self.tracks.append(Track(st.granted_unit, now, list(st.received)))
            self._next_mode = BaseMode.Broadcasting
            out = [Note("verify_ok", "unit=%d count=%d" % (st.granted_unit, got)),
                   Transmit(GOOD, "result"), report]
        else:
            self._next_mode = BaseMode.Granted
            out = [Note("verify_bad", "claimed=%d received=%d" % (st.claimed_count, got)),
                   Transmit(BAD, "result"), report]
        self._reset_attempt()
        return out

    def on_timer(self, token: tuple, now: int) -> list:
        name, gen = token
        if gen != self._gen:
            return []
        st = self.state
        if name == "report_done" and st.mode is BaseMode.Reporting:
            st.mode = self._next_mode
            if st.mode is BaseMode.Broadcasting:
                st.granted_unit = None
                return []
            return [self._timer(now + self.config.rx_timeout, "rx_timeout")]
        if name == "rx_timeout" and st.mode in (BaseMode.Granted, BaseMode.Receiving):
            if st.received or self._partial or self._count is not None:
                residue = len(self._partial)
                self._reset_attempt()
                st.mode = BaseMode.Reporting
                self._next_mode = BaseMode.Granted
                return [Note("frame_residue", "partial=%d" % residue), Transmit(BAD, "result"),
                        self._timer(now + len(BAD) * self.config.byte_time, "report_done")]
            st.mode = BaseMode.Broadcasting
            st.granted_unit = None
            return [Note("grant_lapsed")]
        return []
