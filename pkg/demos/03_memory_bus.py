"""
Sharing the memory bank
=======================

The logging process (P1) and the download process (P2) share one bank
over one bus.  Whoever holds the bus is the only one allowed to touch it.
"""

from gpstrack.memstore import BusBusy, MemoryBank, ProcessId, dump_image, hexdump, load_image
from gpstrack.nmea import GpsFix
from gpstrack.record import encode

P1, P2 = ProcessId.P1, ProcessId.P2

# Print every bus operation as it happens
bank = MemoryBank(listener=lambda op, who, arg: print("  bus", op, who.value, "" if arg is None else arg))

fix = GpsFix("161229.487", "3723.2475", "N", "12158.3416", "W", "0.13", "120598")
bank.acquire(P1)
bank.store_record(P1, encode(fix))

# P2 has to wait
try:
    bank.acquire(P2)
except BusBusy as exc:
    print("P2 refused:", exc)

bank.release(P1)
bank.acquire(P2)
print("P2 reads", bank.read_record(P2, 0).data)
bank.release(P2)

# A memory image is a one-line header plus the raw 4096 bytes
image = dump_image(bank)
print(image[:20])
print(hexdump(bytes(bank.cells[:48])))
assert load_image(image) == bank
