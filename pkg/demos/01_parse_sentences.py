"""
Reading GPS sentences
=====================

A receiver prints NMEA lines.  The logger only cares about two of them:
RMC for position, speed and date, and GGA for fix quality.
"""

from gpstrack.nmea import MessageClass, classify, parse_gga, parse_rmc, tokenize, verify_checksum
from gpstrack.record import decode, encode

rmc = "$GPRMC,161229.487,A,3723.2475,N,12158.3416,W,0.13,309.62,120598,,*10"
gga = "$GPGGA,161229.487,3723.2475,N,12158.3416,W,1,07,1.0,9.0,M,,,,0000*18"

# Split into fields and check the XOR checksum
s = tokenize(rmc)
print(s.type_tag, classify(s.type_tag), "checksum ok:", verify_checksum(s))

# The five stored parameters
fix = parse_rmc(s)
print(fix)

# GGA carries quality and satellite count
info = parse_gga(tokenize(gga))
print("quality", info.quality, "satellites", info.num_satellites, "altitude", info.altitude_m)

# Everything else is classified and ignored
for tag in ("GPGSV", "GPVTG", "GPZDA", "GPXYZ"):
    print(tag, "->", classify(tag).name)
assert classify("GPMSS") is MessageClass.BeaconSignal

# One fix packs into 43 ASCII bytes and back
rec = encode(fix)
print(rec.data, len(rec.data), "bytes")
assert decode(rec) == fix
