"""
How long until memory is full?
==============================

The unit stores records in a 4 KB bank with a 12-bit address.  Each
record is 344 bits, so the bank holds a whole number of them and the
sampling interval decides how many hours of driving that covers.
"""

from datetime import timedelta

from gpstrack.memstore import capacity, format_duration

for minutes in (1, 2, 3, 5):
    r = capacity(4096, 43, timedelta(minutes=minutes))
    print("every %d min: %d records (%.2f exact), full after %s"
          % (minutes, r.records_capacity_whole, float(r.records_capacity_exact),
             format_duration(r.time_to_full)))

# Doubling the memory doubles the window
r = capacity(8192, 43, timedelta(minutes=2))
print("8 KB at 2 min:", format_duration(r.time_to_full))
