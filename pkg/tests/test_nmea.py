import random

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from gpstrack import nmea
from gpstrack.nmea import (
    BadHemisphere,
    BadPattern,
    FieldCount,
    MalformedLine,
    MessageClass,
    NmeaScanner,
    OversizeLine,
    ScannerState,
    classify,
    parse_gga,
    parse_rmc,
    render_rmc,
    scan_stream,
    tokenize,
    verify_checksum,
)

from conftest import GGA, GLL, RMC, RMC_FULL, fixes, xor_oracle

MESSAGE_CLASSES = {
    "GPGGA": MessageClass.GlobalPositioningFix,
    "GPGLL": MessageClass.GeographicPosition,
    "GPGSA": MessageClass.DopActiveSatellites,
    "GPGSV": MessageClass.SatellitesInView,
    "GPRMC": MessageClass.RecommendedMinimum,
    "GPVTG": MessageClass.CourseOverGround,
    "GPMSS": MessageClass.BeaconSignal,
    "GPZDA": MessageClass.PpsTiming,
}


def feed_bytewise(data: bytes):
    state, events = ScannerState(), []
    for b in data:
        try:
            state, ev = scan_stream(b, state)
        except OversizeLine as exc:
            state = exc.state
            events.append("oversize")
            continue
        if ev is not None:
            events.append(ev)
    return events


def feed_chunked(data: bytes, cuts):
    scanner, events = NmeaScanner(), []
    bounds = [0] + sorted(cuts) + [len(data)]
    for a, b in zip(bounds, bounds[1:]):
        for ev in scanner.feed(data[a:b]):
            events.append("oversize" if isinstance(ev, OversizeLine) else ev)
    return events


# -- tokenize -----------------------------------------------------------------


def test_tokenize_gll():
    s = tokenize(GLL)
    assert s.type_tag == "GPGLL"
    assert len(s.data_fields) == 6
    assert s.checksum_claimed == 0x2C
    assert s.fields[0] == s.type_tag


def test_tokenize_minimal():
    s = tokenize("$X*00")
    assert s.type_tag == "X"
    assert s.data_fields == ()


@pytest.mark.parametrize("line", ["$A,B*C*D", "GPRMC,1,2", "$GP\x01RMC", "$A*ZZ", "$A$B", "$*00"])
def test_tokenize_malformed(line):
    with pytest.raises(MalformedLine):
        tokenize(line)


def test_tokenize_keeps_empty_fields():
    s = tokenize("$GPXXX,,a,,*00")
    assert s.fields == ("GPXXX", "", "a", "", "")


# -- checksum ----------------------------------------------------------------


def test_checksum_single_char():
    assert verify_checksum(tokenize("$A*41"))
    assert not verify_checksum(tokenize("$A*42"))


def test_checksum_absent_is_false():
    assert not verify_checksum(tokenize("$A"))


def test_checksum_gll_against_oracle():
    payload = GLL[1:GLL.index("*")]
    assert xor_oracle(payload) == 0x2C  # frozen from the oracle
    assert verify_checksum(tokenize(GLL))


def test_checksum_short_rmc_disagrees():
    # The short RMC lacks one trailing comma; oracle says 0x3C, claim is 0x10.
    assert xor_oracle(RMC[1:RMC.index("*")]) == 0x3C
    assert not verify_checksum(tokenize(RMC))
    assert xor_oracle(RMC_FULL[1:RMC_FULL.index("*")]) == 0x10
    assert verify_checksum(tokenize(RMC_FULL))
    assert xor_oracle(GGA[1:GGA.index("*")]) == 0x18
    assert verify_checksum(tokenize(GGA))


def test_checksum_random_payloads_match_oracle():
    rng = random.Random(1234)
    alphabet = [chr(c) for c in range(0x20, 0x7F) if chr(c) not in "$*"]
    for _ in range(1000):
        payload = "GP" + "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 80)))
        expected = xor_oracle(payload)
        good = "$%s*%02X" % (payload, expected)
        assert nmea.checksum(payload) == expected
        assert verify_checksum(tokenize(good))
        bad = "$%s*%02X" % (payload, expected ^ 0x01)
        assert not verify_checksum(tokenize(bad))


# -- RMC / GGA ----------------------------------------------------------------


def test_parse_rmc_sample_sentence(sample_fix):
    assert parse_rmc(tokenize(RMC)) == sample_fix
    assert parse_rmc(tokenize(RMC_FULL)) == sample_fix


def test_parse_rmc_void_still_extracts(sample_fix):
    fix = parse_rmc(tokenize(RMC.replace(",A,", ",V,", 1)))
    assert fix.valid is False
    assert fix.latitude == sample_fix.latitude and fix.date == sample_fix.date


def test_parse_rmc_truncated():
    with pytest.raises(FieldCount):
        parse_rmc(tokenize("$GPRMC,161229.487,A,3723.2475,N,12158.3416"))


def test_parse_rmc_bad_hemisphere():
    with pytest.raises(BadHemisphere):
        parse_rmc(tokenize(RMC.replace(",N,", ",Q,")))


@pytest.mark.parametrize("old,new,field", [
    ("161229.487", "16122.4870", 1),
    ("3723.2475", "372.32475", 3),
    ("120598", "12059", 9),
    ("0.13", "", 7),
])
def test_parse_rmc_bad_pattern(old, new, field):
    with pytest.raises(BadPattern) as exc:
        parse_rmc(tokenize(RMC.replace(old, new, 1)))
    assert exc.value.field == field


def test_parse_gga_sample_sentence():
    info = parse_gga(tokenize(GGA))
    assert (info.quality, info.num_satellites, info.altitude_m) == (1, 7, "9.0")
    assert info.time_utc == "161229.487"
    assert (info.latitude, info.lat_hemi, info.longitude, info.lon_hemi) == ("3723.2475", "N", "12158.3416", "W")
    assert info.hdop == "1.0"


def test_parse_gga_zero_quality():
    assert parse_gga(tokenize(GGA.replace(",W,1,", ",W,0,"))).quality == 0


def test_parse_gga_empty_satellites():
    with pytest.raises(BadPattern) as exc:
        parse_gga(tokenize(GGA.replace(",1,07,", ",1,,")))
    assert exc.value.field == 7


def test_parse_gga_field_count():
    with pytest.raises(FieldCount):
        parse_gga(tokenize("$GPGGA,161229.487,3723.2475,N"))


@given(fixes(), st.text("0123456789.", max_size=6))
def test_rmc_render_roundtrip(fix, course):
    assert parse_rmc(tokenize(render_rmc(fix, course).rstrip(b"\r\n"))) == fix


@given(fixes(), st.integers(0, 4))
def test_empty_fields_never_shift(fix, pad):
    # extra empty trailing fields must not move anything we read
    line = render_rmc(fix).rstrip(b"\r\n").decode()
    body = line[1:line.index("*")] + "," * pad
    padded = "$%s*%02X" % (body, xor_oracle(body))
    s = tokenize(padded)
    assert verify_checksum(s)
    assert parse_rmc(s) == fix


# -- classify -----------------------------------------------------------------


@pytest.mark.parametrize("tag,cls", sorted(MESSAGE_CLASSES.items()))
def test_classify_table(tag, cls):
    assert classify(tag) is cls


def test_classify_unknown():
    assert classify("GPXYZ") is MessageClass.Other
    assert classify("") is MessageClass.Other


# -- scanning -----------------------------------------------------------------


def test_scan_rmc_event_on_last_byte():
    data = (RMC + "\r\n").encode()
    state = ScannerState()
    hits = []
    for i, b in enumerate(data):
        state, ev = scan_stream(b, state)
        if ev is not None:
            hits.append((i, ev))
    assert len(hits) == 1
    # the '\r' completes the line; '\n' after it is ignored
    assert hits[0][0] == len(data) - 2
    assert hits[0][1].kind == "RMC"
    assert hits[0][1].sentence.type_tag == "GPRMC"


def test_scan_ignores_other_types():
    assert feed_bytewise(b"$GPVTG,309.62,T,,M,0.13,N,0.2,K*6E\r\n") == []


@pytest.mark.parametrize("term", [b"\r\n", b"\n", b"\r"])
def test_scan_terminators(term):
    events = feed_bytewise(GGA.encode() + term + GLL.encode() + term)
    assert [e.kind for e in events] == ["GGA"]


def test_scan_oversize_then_recovers():
    data = b"$" + b"A" * 199
    state = ScannerState()
    raised = 0
    for b in data:
        try:
            state, ev = scan_stream(b, state)
        except OversizeLine as exc:
            raised += 1
            state = exc.state
    assert raised == 1
    assert state == ScannerState()
    events = []
    for b in (RMC + "\n").encode():
        state, ev = scan_stream(b, state)
        events.append(ev)
    assert events[-1] is not None and events[-1].kind == "RMC"


def test_scan_line_of_exactly_max_length_is_fine():
    line = b"$GPRMC," + b"x" * (nmea.MAX_LINE - 7)
    assert len(line) == nmea.MAX_LINE
    events = feed_bytewise(line + b"\n")
    assert len(events) == 1
    assert feed_bytewise(line + b"y\n") == ["oversize"]


_SAMPLE_LINES = [RMC_FULL, GGA, GLL, "$GPGSA,A,3,07,02,26,27*3E", "$GPZDA,181813,14,10,2003,00,00*4F",
                 "$GPMSS,55,27,318.0,100,*66", "$GPVTG,309.62,T,,M,0.13,N,0.2,K*6E",
                 "$GPGSV,2,1,07,07,79,048,42*71"]


@settings(max_examples=200)
@given(st.lists(st.sampled_from(_SAMPLE_LINES), max_size=12),
       st.lists(st.sampled_from([b"\r\n", b"\n", b"\r"]), min_size=12, max_size=12),
       st.lists(st.integers(0, 2000), max_size=8))
def test_incremental_matches_batch(lines, terms, cuts):
    data = b"".join(line.encode() + t for line, t in zip(lines, terms))
    expected = []
    for line in data.replace(b"\r", b"\n").split(b"\n"):
        if line:
            s = tokenize(line)
            if "RMC" in s.type_tag or "GGA" in s.type_tag:
                expected.append(s)
    got = feed_bytewise(data)
    assert [e.sentence for e in got] == expected
    assert feed_chunked(data, [c for c in cuts if c <= len(data)]) == got


@settings(max_examples=300)
@given(st.lists(st.one_of(st.sampled_from([b"$", b"\r", b"\n", b"*", b","]),
                          st.binary(max_size=60),
                          st.sampled_from([x.encode() for x in _SAMPLE_LINES])), max_size=20),
       st.lists(st.integers(0, 3000), max_size=10))
def test_chunked_scanner_equals_bytewise_on_noise(parts, cuts):
    data = b"".join(parts)
    assert feed_chunked(data, [c for c in cuts if c <= len(data)]) == feed_bytewise(data)
