"""
One download, step by step
==========================

The base station says "free" every 100 ms.  A unit in range waits its
priority slot, sends its one-byte id, and after "ack!" streams every
record followed by a zero byte and a two-byte count.  The station answers
"good" or "bad!".  Here both ends are wired together by a tiny loop
instead of the full simulator, so every step is visible.
"""

import heapq

from gpstrack.basestation import BaseStation
from gpstrack.channel import BYTE_TIME_US
from gpstrack.effects import Note, StartTimer, Transmit
from gpstrack.mobile import MobileUnit
from gpstrack.nmea import GpsFix, render_rmc

unit = MobileUnit(3)
bs = BaseStation()

# Log two fixes
for t in ("161229.487", "161429.487"):
    unit.p1_feed(render_rmc(GpsFix(t, "3723.2475", "N", "12158.3416", "W", "0.13", "120598")))
print("stored", unit.bank.record_count, "records")
unit.enter_range(0)

# (time, order, who, kind, payload); a transmission arrives once its last byte is on the air
queue = [(0, 0, "bs", "tick", None)]
order = 1


def handle(now, who, effects):
    global order
    for e in effects:
        order += 1
        if isinstance(e, Transmit):
            shown = e.data if len(e.data) < 8 else e.data[:8] + b"..."
            print("%7d us  %-4s -> %r" % (now, who, shown))
            target = "unit" if who == "bs" else "bs"
            heapq.heappush(queue, (now + len(e.data) * BYTE_TIME_US, order, target, "rx", e.data))
        elif isinstance(e, StartTimer):
            heapq.heappush(queue, (e.at, order, who, "timer", e.token))
        elif isinstance(e, Note):
            print("%7d us  %-4s :  %s %s" % (now, who, e.kind, e.detail))


while queue and unit.powered:
    now, _, who, kind, payload = heapq.heappop(queue)
    if kind == "tick":
        word = bs.bs_tick(now)
        handle(now, "bs", [Transmit(word)] if word else [])
        heapq.heappush(queue, (now + 100_000, 0, "bs", "tick", None))
    elif who == "bs":
        handle(now, "bs", bs.on_bytes(payload, now) if kind == "rx" else bs.on_timer(payload, now))
    else:
        handle(now, "unit", unit.p2_on_channel(payload, now) if kind == "rx" else unit.on_timer(payload, now))

print(bs.tracks[0].to_csv())
print("unit memory after success:", unit.bank.record_count, "records; powered:", unit.powered)
