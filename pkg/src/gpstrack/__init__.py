"""GPS vehicle tracking: NMEA logging, 4 KB track memory, base-station download."""

from .memstore import MemoryBank, ProcessId, capacity
from .nmea import GgaInfo, GpsFix, NmeaSentence, parse_gga, parse_rmc, tokenize, verify_checksum
from .record import TrackRecord, decode, encode
from .simkit import Scenario, load_scenario, run

__all__ = [
    "GgaInfo",
    "GpsFix",
    "MemoryBank",
    "NmeaSentence",
    "ProcessId",
    "Scenario",
    "TrackRecord",
    "capacity",
    "decode",
    "encode",
    "load_scenario",
    "parse_gga",
    "parse_rmc",
    "run",
    "tokenize",
    "verify_checksum",
]
