"""The in-vehicle unit: a logging process and a download process.

P1 watches the GPS byte stream and appends one track record per valid RMC
fix.  P2 listens to the base station, competes for the channel and, once
acknowledged, interrupts P1 and streams every stored record.  Only one of
the two is active at any instant; the memory bus enforces the same rule
for the shared bank.

The unit is a plain event-driven object.  Every handler returns a list of
effects (:mod:`gpstrack.effects`) for the simulator to carry out, and
identical inputs always produce identical effects.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

from .channel import BYTE_TIME_US, priority_slot
from .effects import Note, StartTimer, Transmit
from .memstore import MemoryBank, MemoryFull, ProcessId
from .nmea import (
    GgaInfo,
    MatchEvent,
    NmeaError,
    NmeaScanner,
    OversizeLine,
    parse_gga,
    parse_rmc,
    verify_checksum,
)
from .record import RECORD_SIZE, encode

log = logging.getLogger(__name__)

FREE = b"free"
ACK = b"ack!"
GOOD = b"good"
BAD = b"bad!"
END_OF_RECORDS = b"\x00"
WORDS = (FREE, ACK, GOOD, BAD)


class P1State(enum.Enum):
    WaitForGps = "WaitForGps"
    Collecting = "Collecting"
    Storing = "Storing"
    Suspended = "Suspended"


class P2State(enum.Enum):
    Idle = "Idle"
    AwaitFree = "AwaitFree"
    SendId = "SendId"
    AwaitAck1 = "AwaitAck1"
    ResendId = "ResendId"
    AwaitAck2 = "AwaitAck2"
    Downloading = "Downloading"
    SendCount = "SendCount"
    AwaitResult = "AwaitResult"
    Done = "Done"


LISTENING = (P2State.Idle, P2State.AwaitFree)
CONTENDING = (P2State.SendId, P2State.AwaitAck1, P2State.ResendId, P2State.AwaitAck2)


@dataclass
class UnitConfig:
    ack_timeout: int = 500_000
    slot_unit: int = 10_000
    max_download_retries: int = 3
    byte_time: int = BYTE_TIME_US
    # An ack arriving later than this after our ID answers someone else.
    ack_window: int | None = None

    def __post_init__(self):
        if self.ack_window is None:
            self.ack_window = 10 * self.byte_time


@dataclass
class UnitState:
    unit_id: int
    priority_slot: int
    p1_state: P1State = P1State.WaitForGps
    p2_state: P2State = P2State.Idle
    flag_c: bool = False
    active: ProcessId = ProcessId.P1


@dataclass
class InterruptLine:
    pending: bool = False
    source: str = "P2toP1"


@dataclass
class UnitStats:
    logged: int = 0
    downloads: int = 0
    id_sends: list = field(default_factory=list)  # IDs sent per channel acquisition attempt
    outcome: str = "no contact"


class MobileUnit:
    def __init__(self, unit_id: int, bank: MemoryBank | None = None, config: UnitConfig | None = None):
        if not 0 < unit_id < 256:
            raise ValueError("unit id must fit in one byte (1..255)")
        self.config = config or UnitConfig()
        self.state = UnitState(unit_id, priority_slot(unit_id, self.config.slot_unit))
        self.bank = bank if bank is not None else MemoryBank()
        self.interrupt = InterruptLine()
        self.scanner = NmeaScanner()
        self.status: GgaInfo | None = None
        self.full = False
        self.in_range = False
        self.powered = True
        self.stats = UnitStats()
        self._gen = 0
        self._id_sent_at = 0
        self._retries = 0
        self._window = b""
        self._records: list = []

    @property
    def unit_id(self) -> int:
        return self.state.unit_id

    # -- P1: logging -------------------------------------------------------

    def p1_feed(self, data: bytes) -> list[Note]:
        """Run GPS bytes through the scanner, storing each valid RMC fix."""
        st = self.state
        if not self.powered or st.active is not ProcessId.P1:
            return []
        notes: list[Note] = []
        for event in self.scanner.feed(bytes(data)):
            if isinstance(event, OversizeLine):
                notes.append(Note("gps_oversize"))
                continue
            notes.extend(self._on_match(event))
        st.p1_state = P1State.Collecting if self.scanner.collecting else P1State.WaitForGps
        return notes

    def _on_match(self, event: MatchEvent) -> list[Note]:
        sentence = event.sentence
        if not verify_checksum(sentence):
            log.warning("unit %d: dropping %s with bad checksum", self.unit_id, sentence.type_tag)
            return [Note("bad_checksum", sentence.type_tag)]
        if event.kind == "GGA":
            try:
                self.status = parse_gga(sentence)
            except NmeaError as exc:
                return [Note("bad_sentence", "GGA: %s" % exc)]
            return []
        if len(sentence.fields) < 3 or sentence.fields[2] != "A":
            return [Note("no_fix")]
        st = self.state
        st.flag_c = True
        try:
            record = encode(parse_rmc(sentence))
        except NmeaError as exc:
            st.flag_c = False
            return [Note("bad_sentence", "RMC: %s" % exc)]
        st.p1_state = P1State.Storing
        notes = []
        self.bank.acquire(ProcessId.P1)
        try:
            self.bank.store_record(ProcessId.P1, record)
            self.stats.logged += 1
        except MemoryFull:
            if not self.full:
                notes.append(Note("memory_full", "count=%d" % self.bank.record_count))
            self.full = True
        finally:
            self.bank.release(ProcessId.P1)
        st.flag_c = False
        return notes

    def interrupt_p1(self) -> Note:
        """Stop P1 and hand control to P2.  A half-read sentence is dropped."""
        self.interrupt.pending = True
        self.scanner.reset()
        self.state.p1_state = P1State.Suspended
        self.state.flag_c = False
        self.state.active = ProcessId.P2
        self.interrupt.pending = False
        return Note("interrupt", "P1 suspended")

    def resume_p1(self):
        self.scanner.reset()
        self.state.active = ProcessId.P1
        self.state.p1_state = P1State.WaitForGps
        self.state.flag_c = False

    # -- range / power -----------------------------------------------------

    def enter_range(self, now: int) -> list:
        self.in_range = True
        if self.powered and self.state.p2_state is P2State.Idle:
            self.state.p2_state = P2State.AwaitFree
        return [Note("in_range")]

    def leave_range(self, now: int) -> list:
        self.in_range = False
        out: list = [Note("out_of_range")]
        st = self.state
        if st.p2_state is P2State.Done:
            self.powered = True
            st.p2_state = P2State.Idle
            self.resume_p1()
            self._cancel_timer()
            out.append(Note("power_up"))
        elif st.p2_state not in LISTENING:
            out.extend(self._abort("out of range"))
        else:
            st.p2_state = P2State.Idle
        return out

    # -- P2: channel protocol ---------------------------------------------

    def _timer(self, at: int, name: str) -> StartTimer:
        self._gen += 1
        return StartTimer(at, (name, self._gen))

    def _cancel_timer(self):
        self._gen += 1

    def p2_on_channel(self, rx: bytes, now: int) -> list:
        """Consume downlink bytes; whole words trigger protocol steps."""
        if not self._window and rx in WORDS:
            return self._on_word(bytes(rx), now)  # the usual case: one whole word per delivery
        out: list = []
        for b in rx:
            self._window = (self._window + bytes((b,)))[-4:]
            if self._window in WORDS:
                word, self._window = self._window, b""
                out.extend(self._on_word(word, now))
        return out

    def _on_word(self, word: bytes, now: int) -> list:
        st = self.state
        if not self.powered:
            return []
        if word == FREE:
            if st.p2_state in LISTENING and self.in_range:
                st.p2_state = P2State.SendId
                self.stats.id_sends.append(0)
                return [self._timer(now + st.priority_slot, "slot")]
            return []
        if word == ACK:
            if st.p2_state is P2State.SendId:
                self._cancel_timer()
                st.p2_state = P2State.AwaitFree
                return [Note("yield")]
            if st.p2_state in (P2State.AwaitAck1, P2State.AwaitAck2):
                if now - self._id_sent_at <= self.config.ack_window:
                    return self._granted(now)
                self._cancel_timer()
                st.p2_state = P2State.AwaitFree
                return [Note("yield", "ack for another unit")]
            return []
        if st.p2_state is not P2State.AwaitResult:
            return []
        if word == GOOD:
            return self._success()
        self._retries += 1
        if self._retries > self.config.max_download_retries:
            return self._abort("retries exhausted")
        return [Note("retry", "attempt %d" % (self._retries + 1))] + self._start_download(now)

    def _send_id(self, now: int, state: P2State) -> list:
        self.state.p2_state = state
        self._id_sent_at = now
        self.stats.id_sends[-1] += 1
        return [Transmit(bytes((self.unit_id,)), "id"),
                self._timer(now + self.config.ack_timeout, "ack_timeout")]

    def _granted(self, now: int) -> list:
        out: list = [Note("granted"), self.interrupt_p1()]
        self.bank.acquire(ProcessId.P2)
        self._records = [self.bank.read_record(ProcessId.P2, i) for i in range(self.bank.record_count)]
        self._retries = 0
        self.stats.outcome = "failed"
        return out + self._start_download(now)

    def _start_download(self, now: int) -> list:
        self.stats.downloads += 1
        if not self._records:
            return self._send_count(now)
        self.state.p2_state = P2State.Downloading
        out: list = [Transmit(r.data, "record") for r in self._records]
        span = len(self._records) * RECORD_SIZE * self.config.byte_time
        out.append(self._timer(now + span, "records_done"))
        return out

    def _send_count(self, now: int) -> list:
        self.state.p2_state = P2State.SendCount
        payload = END_OF_RECORDS + len(self._records).to_bytes(2, "big")
        return [Transmit(payload, "count"),
                self._timer(now + len(payload) * self.config.byte_time, "count_done")]

    def _success(self) -> list:
        self._cancel_timer()
        self.bank.erase(ProcessId.P2)
        self.bank.release(ProcessId.P2)
        self.full = False
        self.state.p2_state = P2State.Done
        self.powered = False
        self.stats.outcome = "success"
        return [Note("download_ok", "count=%d" % len(self._records)), Note("power_down")]

    def _abort(self, reason: str) -> list:
        self._cancel_timer()
        if self.bank.bus_owner is ProcessId.P2:
            self.bank.release(ProcessId.P2)
        if self.state.active is ProcessId.P2:
            self.resume_p1()
        self.state.p2_state = P2State.Idle
        return [Note("abort", reason)]

    def on_timer(self, token: tuple, now: int) -> list:
        name, gen = token
        if gen != self._gen:
            return []
        st = self.state
        if name == "slot" and st.p2_state is P2State.SendId:
            return self._send_id(now, P2State.AwaitAck1)
        if name == "ack_timeout":
            if st.p2_state is P2State.AwaitAck1:
                st.p2_state = P2State.ResendId
                return [Note("no_ack", "resending id")] + self._send_id(now, P2State.AwaitAck2)
            if st.p2_state is P2State.AwaitAck2:
                st.p2_state = P2State.Idle
                return [Note("no_ack", "giving up")]
        if name == "records_done" and st.p2_state is P2State.Downloading:
            return self._send_count(now)
        if name == "count_done" and st.p2_state is P2State.SendCount:
            st.p2_state = P2State.AwaitResult
            return [self._timer(now + self.config.ack_timeout, "result_timeout")]
        if name == "result_timeout" and st.p2_state is P2State.AwaitResult:
            return self._abort("no result")
        return []
