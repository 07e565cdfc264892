"""Command-line front end.

Exit codes: 0 ok, 1 I/O error, 2 nothing parsed, 64 bad usage, 65 bad input
data (scenario or memory image).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from datetime import timedelta
from pathlib import Path

from . import simkit
from .basestation import fixes_to_csv
from .memstore import ImageError, capacity, format_duration, hexdump, load_image
from .nmea import NmeaError, parse_rmc, tokenize, verify_checksum
from .record import decode

EX_OK = 0
EX_IO = 1
EX_EMPTY = 2
EX_USAGE = 64
EX_DATAERR = 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_duration(text):
    try:
        us = simkit.parse_duration(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bad duration %r (try 2m, 90s)" % text)
    if us <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return us


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not an integer: %r" % text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _rate(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gpstrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("parse", help="extract RMC fixes from an NMEA file as CSV")
    s.add_argument("input")

    s = sub.add_parser("capacity", help="record capacity of the track memory")
    s.add_argument("--mem", type=_positive_int, default=4096, help="memory size in bytes")
    s.add_argument("--record-bits", type=_positive_int, default=344)
    s.add_argument("--interval", type=_positive_duration, default=simkit.parse_duration("2m"),
                   help="sampling interval, e.g. 2m")

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("scenario")
    s.add_argument("--out", default="sim_out", help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--interval", type=_positive_duration, help="override sample interval")
    s.add_argument("--corruption-rate", type=_rate)
    s.add_argument("--trace", action="store_true", help="also write a per-byte wire trace")

    s = sub.add_parser("dump-memory", help="hexdump a memory image")
    s.add_argument("image")

    s = sub.add_parser("decode-track", help="decode the records in a memory image to CSV")
    s.add_argument("image")
    return p


def cmd_parse(args, out, err) -> int:
    try:
        text = Path(args.input).read_bytes().decode("ascii", "replace")
    except OSError as exc:
        print("gpstrack: %s" % exc, file=err)
        return EX_IO
    fixes = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            sentence = tokenize(line)
        except NmeaError as exc:
            print("line %d: %s" % (lineno, exc), file=err)
            continue
        if not sentence.type_tag.endswith("RMC"):
            continue
        if not verify_checksum(sentence):
            print("line %d: checksum mismatch, skipped" % lineno, file=err)
            continue
        try:
            fix = parse_rmc(sentence)
        except NmeaError as exc:
            print("line %d: %s" % (lineno, exc), file=err)
            continue
        if not fix.valid:
            print("line %d: no fix (status V), skipped" % lineno, file=err)
            continue
        fixes.append(fix)
    if not fixes:
        print("gpstrack: no fixes found", file=err)
        return EX_EMPTY
    out.write(fixes_to_csv(fixes))
    return EX_OK


def cmd_capacity(args, out, err) -> int:
    record_bytes = math.ceil(args.record_bits / 8)
    interval = timedelta(microseconds=args.interval)
    rep = capacity(args.mem, record_bytes, interval)
    print("record: %d bits = %d bytes; memory: %d bytes" % (args.record_bits, record_bytes, args.mem), file=out)
    print("%d records (%.2f exact), full in %s"
          % (rep.records_capacity_whole, float(rep.records_capacity_exact), format_duration(rep.time_to_full)),
          file=out)
    return EX_OK


def cmd_simulate(args, out, err) -> int:
    try:
        scenario = simkit.load_scenario(args.scenario)
    except OSError as exc:
        print("gpstrack: %s" % exc, file=err)
        return EX_IO
    except simkit.ConfigError as exc:
        print("%s: %s" % (args.scenario, exc), file=err)
        return EX_DATAERR
    if args.seed is not None:
        scenario.channel.rng_seed = args.seed
    if args.corruption_rate is not None:
        scenario.channel.corruption_rate = args.corruption_rate
    if args.interval is not None:
        scenario.sample_interval = args.interval
    result = simkit.run(scenario, trace=args.trace)
    try:
        simkit.write_outputs(result, args.out)
    except OSError as exc:
        print("gpstrack: %s" % exc, file=err)
        return EX_IO
    for summary in result.summaries:
        print(summary.line(), file=out)
    print("wrote %s (%d events)" % (args.out, len(result.log)), file=err)
    return EX_OK


def _load_image(path, err):
    try:
        return load_image(Path(path).read_bytes()), EX_OK
    except OSError as exc:
        print("gpstrack: %s" % exc, file=err)
        return None, EX_IO
    except ImageError as exc:
        print("%s: %s" % (path, exc), file=err)
        return None, EX_DATAERR


def cmd_dump_memory(args, out, err) -> int:
    bank, code = _load_image(args.image, err)
    if bank is None:
        return code
    print("count=%d cursor=%d" % (bank.record_count, bank.write_cursor), file=out)
    print(hexdump(bytes(bank.cells)), file=out)
    return EX_OK


def cmd_decode_track(args, out, err) -> int:
    bank, code = _load_image(args.image, err)
    if bank is None:
        return code
    try:
        fixes = [decode(r) for r in bank.records()]
    except NmeaError as exc:
        print("%s: corrupt record: %s" % (args.image, exc), file=err)
        return EX_DATAERR
    out.write(fixes_to_csv(fixes))
    return EX_OK


COMMANDS = {
    "parse": cmd_parse,
    "capacity": cmd_capacity,
    "simulate": cmd_simulate,
    "dump-memory": cmd_dump_memory,
    "decode-track": cmd_decode_track,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    logging.basicConfig(level=logging.ERROR, format="%(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print("gpstrack: %s" % exc, file=err)
        return EX_USAGE
    return COMMANDS[args.command](args, out, err)


if __name__ == "__main__":
    sys.exit(main())
