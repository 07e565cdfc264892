"""Deterministic discrete-event simulation of a fleet and its base station.

All times are integer microseconds of virtual time.  Events are ordered by
``(time, actor, sequence)`` where the base station is actor 0 and each unit
is its own id, so a scenario always replays the same way.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path
from typing import NamedTuple

from .basestation import BaseConfig, BaseStation, Track
from .channel import BASE, ChannelConfig, Channel, Direction
from .effects import Note, StartTimer, Transmit
from .memstore import MemoryBank, dump_image
from .mobile import MobileUnit, UnitConfig
from .nmea import GgaInfo, GpsFix, render_gga, render_rmc

US = 1
MS = 1_000
SECOND = 1_000_000
MINUTE = 60 * SECOND
HOUR = 60 * MINUTE

DEFAULT_EPOCH = datetime(1998, 5, 12, 16, 12, 29, 487000)

_DURATION_RE = re.compile(r"(\d+(?:\.\d+)?)(us|ms|s|m|min|h)?")
_UNITS = {"us": US, "ms": MS, "s": SECOND, None: SECOND, "m": MINUTE, "min": MINUTE, "h": HOUR}


class ConfigError(ValueError):
    def __init__(self, message, line=None, field=None):
        self.message = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append("line %d" % line)
        if field:
            where.append(field)
        super().__init__(": ".join(where + [message]))


class BadRoute(ConfigError):
    pass


def parse_duration(text: str) -> int:
    """``"2m"`` -> 120_000_000.  A bare number is seconds."""
    m = _DURATION_RE.fullmatch(text.strip())
    if not m:
        raise ValueError("bad duration %r" % text)
    return round(float(m.group(1)) * _UNITS[m.group(2)])


# -- scenario ----------------------------------------------------------------


@dataclass(frozen=True)
class Waypoint:
    t: int
    lat: float
    lon: float
    speed: float
    alt: float = 9.0


@dataclass
class UnitSpec:
    unit_id: int
    route: list[Waypoint]
    rendezvous: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class Scenario:
    units: list[UnitSpec] = field(default_factory=list)
    sample_interval: int = 2 * MINUTE
    duration: int | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    broadcast_period: int = 100 * MS
    ack_timeout: int = 500 * MS
    max_download_retries: int = 3
    epoch: datetime = DEFAULT_EPOCH

    def end_time(self) -> int:
        if self.duration is not None:
            return self.duration
        last = SECOND
        for u in self.units:
            if u.route:
                last = max(last, u.route[-1].t + MINUTE)
            for _, end in u.rendezvous:
                last = max(last, end + MINUTE)
        return last

    def validate(self):
        seen = set()
        for i, u in enumerate(self.units):
            where = "units[%d]" % i
            if u.unit_id in seen:
                raise ConfigError("duplicate unit id %d" % u.unit_id, field=where)
            seen.add(u.unit_id)
            if not 0 < u.unit_id < 256:
                raise ConfigError("unit id %d outside 1..255" % u.unit_id, field=where)
            if not u.route:
                raise BadRoute("route is empty", field=where)
            check_route(u.route, where)
            prev_end = None
            for start, end in sorted(u.rendezvous):
                if not start < end:
                    raise ConfigError("rendezvous must end after it starts", field=where)
                if prev_end is not None and start < prev_end:
                    raise ConfigError("rendezvous windows overlap", field=where)
                prev_end = end
        if self.sample_interval <= 0:
            raise ConfigError("must be positive", field="sample_interval")
        if self.duration is not None and self.duration <= 0:
            raise ConfigError("must be positive", field="duration")
        if self.broadcast_period <= 0:
            raise ConfigError("must be positive", field="broadcast_period")
        if self.max_download_retries < 0:
            raise ConfigError("must not be negative", field="max_download_retries")


def check_route(route, where="route"):
    for a, b in zip(route, route[1:]):
        if not b.t > a.t:
            raise BadRoute("waypoint timestamps must strictly increase", field=where)
    for w in route:
        if not -90 <= w.lat <= 90 or not -180 <= w.lon <= 180:
            raise BadRoute("coordinates out of range", field=where)
        if not 0 <= w.speed < 999.995:
            raise BadRoute("speed must be in [0, 999.99] knots", field=where)


# -- NMEA generation ---------------------------------------------------------


def format_lat(deg: float) -> tuple[str, str]:
    whole, minutes = divmod(round(abs(deg) * 600_000), 600_000)
    return "%02d%02d.%04d" % (whole, minutes // 10_000, minutes % 10_000), "N" if deg >= 0 else "S"


def format_lon(deg: float) -> tuple[str, str]:
    whole, minutes = divmod(round(abs(deg) * 600_000), 600_000)
    return "%03d%02d.%04d" % (whole, minutes // 10_000, minutes % 10_000), "E" if deg >= 0 else "W"


def _position(route, t):
    if t <= route[0].t:
        return route[0], 0.0
    for a, b in zip(route, route[1:]):
        if t <= b.t:
            f = (t - a.t) / (b.t - a.t)
            w = Waypoint(t, a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon),
                         a.speed + f * (b.speed - a.speed), a.alt + f * (b.alt - a.alt))
            dx = (b.lon - a.lon) * math.cos(math.radians(a.lat))
            course = math.degrees(math.atan2(dx, b.lat - a.lat)) % 360.0
            return w, course
    return route[-1], 0.0


def sample_times(route, sample_interval: int) -> list[int]:
    start, end = route[0].t, route[-1].t
    return list(range(start, end + 1, sample_interval))


def gen_nmea(route, sample_interval: int, epoch: datetime = DEFAULT_EPOCH) -> list[tuple[int, bytes]]:
    """One RMC and one GGA line per sample tick, from first to last waypoint."""
    if not route:
        raise BadRoute("route is empty")
    check_route(route)
    out = []
    for t in sample_times(route, sample_interval):
        w, course = _position(route, t)
        stamp = epoch + timedelta(microseconds=t)
        hhmmss = "%02d%02d%02d.%03d" % (stamp.hour, stamp.minute, stamp.second, stamp.microsecond // 1000)
        lat, ns = format_lat(w.lat)
        lon, ew = format_lon(w.lon)
        fix = GpsFix(hhmmss, lat, ns, lon, ew, "%.2f" % w.speed, "%02d%02d%02d" % (stamp.day, stamp.month, stamp.year % 100))
        gga = GgaInfo(hhmmss, lat, ns, lon, ew, 1, 7, "1.0", "%.1f" % w.alt)
        out.append((t, render_rmc(fix, "%.2f" % course) + render_gga(gga)))
    return out


# -- event log ---------------------------------------------------------------


class LogEntry(NamedTuple):
    time: int
    actor: str
    kind: str
    detail: str = ""

    def to_json(self) -> str:
        return json.dumps({"t": self.time, "actor": self.actor, "kind": self.kind, "detail": self.detail},
                          separators=(",", ":"))


class EventLog:
    def __init__(self):
        self.entries: list[LogEntry] = []
        self._order: list[tuple[int, int]] = []

    def add(self, time, actor_order, actor, kind, detail=""):
        self.entries.append(LogEntry(time, actor, kind, detail))
        self._order.append((time, actor_order))

    def finalize(self):
        idx = sorted(range(len(self.entries)), key=self._order.__getitem__)
        self.entries = [self.entries[i] for i in idx]
        self._order = [self._order[i] for i in idx]

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.entries)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def of_kind(self, kind, actor=None):
        return [e for e in self.entries if e.kind == kind and (actor is None or e.actor == actor)]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


# -- simulator ---------------------------------------------------------------


@dataclass
class UnitSummary:
    unit_id: int
    logged: int
    downloads: int
    outcome: str

    def line(self) -> str:
        plural = "attempt" if self.downloads == 1 else "attempts"
        return "unit %d: %d logged, %d %s, %s" % (self.unit_id, self.logged, self.downloads, plural, self.outcome)


@dataclass
class SimResult:
    log: EventLog
    banks: dict
    tracks: list[Track]
    units: dict
    summaries: list[UnitSummary]
    wire_trace: list[str] | None = None
    uplink: dict = field(default_factory=dict)  # unit id -> [(label, bytes)] as sent

    def tracks_for(self, unit_id):
        return [t for t in self.tracks if t.unit_id == unit_id]


def _actor(unit_id) -> str:
    return "bs" if unit_id == BASE else "u%d" % unit_id


class Simulator:
    def __init__(self, scenario: Scenario, trace: bool = False, observer=None):
        scenario.validate()
        self.scenario = scenario
        self.end = scenario.end_time()
        chan_cfg = replace(scenario.channel, range_map={})
        self.channel = Channel(chan_cfg)
        self.log = EventLog()
        self.bs = BaseStation(BaseConfig(scenario.broadcast_period, byte_time=chan_cfg.byte_time))
        self.units: dict[int, MobileUnit] = {}
        self.trace: list | None = [] if trace else None
        self.observer = observer
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self._busy: dict = {}
        self.uplink: dict = {}
        self._listening: set = set()
        static_range = scenario.channel.range_map
        ucfg = UnitConfig(ack_timeout=scenario.ack_timeout, max_download_retries=scenario.max_download_retries,
                          byte_time=chan_cfg.byte_time)
        for spec in sorted(scenario.units, key=lambda u: u.unit_id):
            uid = spec.unit_id
            bank = MemoryBank(listener=self._bank_listener(uid))
            self.units[uid] = MobileUnit(uid, bank, ucfg)
            self.uplink[uid] = []
            chan_cfg.range_map[uid] = False
            windows = sorted(spec.rendezvous)
            if not windows and static_range.get(uid):
                windows = [(0, self.end)]
            for start, stop in windows:
                self._push(start, uid, "range", True)
                self._push(stop, uid, "range", False)
            for t, data in gen_nmea(spec.route, scenario.sample_interval, scenario.epoch):
                self._push(t, uid, "gps", data)
        self._push(0, BASE, "tick", None)

    def _order(self, actor) -> int:
        return 0 if actor == BASE else actor

    def _push(self, t, actor, kind, payload):
        self._seq += 1
        heapq.heappush(self._queue, (t, self._order(actor), self._seq, actor, kind, payload))

    def _bank_listener(self, uid):
        name = _actor(uid)
        add = self.log.add

        def listener(op, owner, arg):
            who = owner.value
            add(self.now, uid, name, "bus_" + op, who if arg is None else "%s %d" % (who, arg))
        return listener

    def _note(self, actor, kind, detail=""):
        if actor == BASE:
            self.log.add(self.now, 0, "bs", kind, detail)
        else:
            self.log.add(self.now, actor, "u%d" % actor, kind, detail)

    def _apply(self, actor, effects):
        for eff in effects:
            if isinstance(eff, Note):
                self._note(actor, eff.kind, eff.detail)
            elif isinstance(eff, StartTimer):
                self._push(eff.at, actor, "timer", eff.token)
            elif isinstance(eff, Transmit):
                self._transmit(actor, eff)

    def _transmit(self, actor, eff: Transmit, log=True):
        start = max(self.now, self._busy.get(actor, 0))
        tx = self.channel.transmit(actor, eff.data, start)
        self._busy[actor] = tx.end
        if log:
            self._note(actor, "tx", "%s %dB" % (eff.label, len(eff.data)))
        if actor != BASE:
            self.uplink[actor].append((eff.label, bytes(eff.data)))
            if not tx.in_range:
                self._note(actor, "tx_lost", "out of range")
        if self.trace is not None:
            self.trace.extend(tx.wire_events())
        if actor == BASE and not self._listening:
            return  # nobody in range; a unit arriving mid-word could not decode it anyway
        self._push(tx.end, actor, "deliver", tx)

    def _deliver(self, tx):
        if tx.direction is Direction.Downlink:
            for uid in sorted(self._listening):
                unit = self.units[uid]
                if unit.powered:
                    self._apply(uid, unit.p2_on_channel(tx.data, self.now))
            return
        if not tx.in_range:
            return
        if tx.collided:
            self._note(BASE, "collision", "from %s, %dB lost" % (tx.source, len(tx.data)))
            return
        self._apply(BASE, self.bs.on_bytes(tx.data, self.now))

    def run(self) -> SimResult:
        period = self.scenario.broadcast_period
        while self._queue and self._queue[0][0] < self.end:
            t, _, _, actor, kind, payload = heapq.heappop(self._queue)
            self.now = t
            if kind == "tick":
                word = self.bs.bs_tick(t)
                if word is not None:
                    quiet = not self._listening
                    if quiet and self.trace is None and self.channel.config.corruption_rate == 0.0:
                        # nobody can hear it and nothing random happens to it
                        self._busy[BASE] = max(t, self._busy.get(BASE, 0)) + len(word) * self.channel.config.byte_time
                    else:
                        self._transmit(BASE, Transmit(word, "free"), log=not quiet)
                self._push(t + period, BASE, "tick", None)
                self.channel.forget_before(t)
            elif kind == "deliver":
                self._deliver(payload)
            elif kind == "timer":
                target = self.bs if actor == BASE else self.units[actor]
                self._apply(actor, target.on_timer(payload, t))
            elif kind == "gps":
                self._apply(actor, self.units[actor].p1_feed(payload))
            elif kind == "range":
                unit = self.units[actor]
                self.channel.config.range_map[actor] = payload
                if payload:
                    self._listening.add(actor)
                else:
                    self._listening.discard(actor)
                self._apply(actor, unit.enter_range(t) if payload else unit.leave_range(t))
            if self.observer is not None:
                self.observer(self, t, actor)
        self.log.finalize()
        trace = None
        if self.trace is not None:
            events = sorted(self.trace, key=lambda e: (e.time, 0 if e.source == BASE else int(e.source[1:])))
            trace = [e.format() for e in events]
        summaries = [UnitSummary(uid, u.stats.logged, u.stats.downloads, u.stats.outcome)
                     for uid, u in self.units.items()]
        return SimResult(
            log=self.log,
            banks={uid: u.bank for uid, u in self.units.items()},
            tracks=list(self.bs.tracks),
            units=self.units,
            summaries=summaries,
            wire_trace=trace,
            uplink=self.uplink,
        )


def run(scenario: Scenario, trace: bool = False, observer=None) -> SimResult:
    return Simulator(scenario, trace=trace, observer=observer).run()


def write_outputs(result: SimResult, outdir) -> list[Path]:
    """Write the event log, memory images, track CSVs and summary."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, data):
        path = out / name
        if isinstance(data, str):
            data = data.encode()
        path.write_bytes(data)
        written.append(path)

    put("events.jsonl", result.log.to_jsonl())
    for uid, bank in sorted(result.banks.items()):
        put("unit%d.mem" % uid, dump_image(bank))
    counters: dict = {}
    for track in result.tracks:
        counters[track.unit_id] = counters.get(track.unit_id, 0) + 1
        put("track_unit%d_%d.csv" % (track.unit_id, counters[track.unit_id]), track.to_csv())
    put("summary.txt", "".join(s.line() + "\n" for s in result.summaries))
    if result.wire_trace is not None:
        put("wire.trace", "".join(line + "\n" for line in result.wire_trace))
    return written


# -- scenario files ----------------------------------------------------------

_GLOBAL_KEYS = {
    "duration": ("duration", parse_duration),
    "sample_interval": ("sample_interval", parse_duration),
    "broadcast_period": ("broadcast_period", parse_duration),
    "ack_timeout": ("ack_timeout", parse_duration),
    "max_download_retries": ("max_download_retries", int),
}


def parse_scenario(text: str) -> Scenario:
    """Read the line-oriented scenario format (see README)."""
    sc = Scenario()
    seed, rate = 0, 0.0
    current: UnitSpec | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        try:
            if key == "unit":
                if len(args) != 1:
                    raise ConfigError("expected: unit <id>", lineno, key)
                uid = int(args[0])
                if any(u.unit_id == uid for u in sc.units):
                    raise ConfigError("duplicate unit id %d" % uid, lineno, key)
                if not 0 < uid < 256:
                    raise ConfigError("unit id %d outside 1..255" % uid, lineno, key)
                current = UnitSpec(uid, [])
                sc.units.append(current)
            elif key in ("waypoint", "rendezvous"):
                if current is None:
                    raise ConfigError("%s before any unit line" % key, lineno, key)
                if key == "waypoint":
                    if len(args) not in (4, 5):
                        raise ConfigError("expected: waypoint <t> <lat> <lon> <knots> [alt]", lineno, key)
                    w = Waypoint(parse_duration(args[0]), *map(float, args[1:]))
                    if current.route and w.t <= current.route[-1].t:
                        raise ConfigError("timestamps must strictly increase", lineno, key)
                    check_route([w], key)
                    current.route.append(w)
                else:
                    if len(args) != 2:
                        raise ConfigError("expected: rendezvous <start> <end>", lineno, key)
                    current.rendezvous.append((parse_duration(args[0]), parse_duration(args[1])))
            elif current is not None:
                raise ConfigError("global settings must precede the first unit", lineno, key)
            elif len(args) != 1:
                raise ConfigError("expected: %s <value>" % key, lineno, key)
            elif key in _GLOBAL_KEYS:
                attr, conv = _GLOBAL_KEYS[key]
                setattr(sc, attr, conv(args[0]))
            elif key == "seed":
                seed = int(args[0])
            elif key == "corruption_rate":
                rate = float(args[0])
            elif key == "epoch":
                sc.epoch = datetime.fromisoformat(args[0])
            else:
                raise ConfigError("unknown setting", lineno, key)
        except ConfigError as exc:
            if exc.line is None:
                raise ConfigError(exc.message, lineno, exc.field or key) from None
            raise
        except ValueError as exc:
            raise ConfigError(str(exc), lineno, key) from None
    try:
        sc.channel = ChannelConfig(corruption_rate=rate, rng_seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc), field="corruption_rate") from None
    sc.validate()
    return sc


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def demo_scenario_path() -> Path:
    return Path(__file__).with_name("data") / "demo.scn"
