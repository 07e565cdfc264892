import hashlib
import json

import pytest

from gpstrack.channel import ChannelConfig
from gpstrack.memstore import dump_image
from gpstrack.nmea import parse_gga, parse_rmc, tokenize, verify_checksum
from gpstrack.simkit import (
    MINUTE,
    SECOND,
    BadRoute,
    ConfigError,
    Scenario,
    UnitSpec,
    Waypoint,
    format_lat,
    format_lon,
    gen_nmea,
    load_scenario,
    demo_scenario_path,
    parse_duration,
    parse_scenario,
    run,
    write_outputs,
)

from conftest import SAMPLE_FIX, random_fleet

SAMPLE_POINT = Waypoint(0, 37 + 23.2475 / 60, -(121 + 58.3416 / 60), 0.13)


def test_parse_duration():
    assert parse_duration("2m") == 2 * MINUTE
    assert parse_duration("90") == 90 * SECOND
    assert parse_duration("250ms") == 250_000
    assert parse_duration("1.5h") == 90 * MINUTE
    with pytest.raises(ValueError):
        parse_duration("soon")


def test_coordinate_formatting():
    assert format_lat(SAMPLE_POINT.lat) == ("3723.2475", "N")
    assert format_lon(SAMPLE_POINT.lon) == ("12158.3416", "W")
    assert format_lat(-0.5) == ("0030.0000", "S")
    assert format_lon(0.0) == ("00000.0000", "E")


def test_generated_sentences_reproduce_sample_fix():
    route = [SAMPLE_POINT, Waypoint(MINUTE, SAMPLE_POINT.lat, SAMPLE_POINT.lon, 0.13)]
    (t, data), _ = gen_nmea(route, MINUTE)
    assert t == 0
    rmc, gga = data.decode().split("\r\n")[:2]
    assert parse_rmc(tokenize(rmc)) == SAMPLE_FIX
    info = parse_gga(tokenize(gga))
    assert (info.quality, info.num_satellites, info.altitude_m) == (1, 7, "9.0")


def test_generated_checksums_valid():
    route = [Waypoint(0, 10.0, 20.0, 3.0), Waypoint(30 * MINUTE, -10.0, -20.0, 40.0)]
    for _, data in gen_nmea(route, MINUTE):
        for line in data.decode().split("\r\n")[:-1]:
            assert verify_checksum(tokenize(line))


def test_sample_count_for_190_minutes():
    route = [Waypoint(0, 1.0, 1.0, 1.0), Waypoint(190 * MINUTE, 1.0, 1.0, 1.0)]
    assert len(gen_nmea(route, 2 * MINUTE)) == 96


def test_bad_route():
    with pytest.raises(BadRoute):
        gen_nmea([Waypoint(5, 0, 0, 0), Waypoint(5, 1, 1, 0)], SECOND)
    with pytest.raises(BadRoute):
        gen_nmea([Waypoint(0, 95, 0, 0)], SECOND)
    with pytest.raises(BadRoute):
        gen_nmea([], SECOND)


def test_demo_end_to_end(tmp_path):
    result = run(load_scenario(demo_scenario_path()))
    (track,) = result.tracks
    assert track.unit_id == 1 and len(track.records) == 3
    assert track.fixes[0] == SAMPLE_FIX
    assert [s.line() for s in result.summaries] == ["unit 1: 3 logged, 1 attempt, success"]
    written = {p.name for p in write_outputs(result, tmp_path)}
    assert written == {"events.jsonl", "unit1.mem", "track_unit1_1.csv", "summary.txt"}
    assert (tmp_path / "track_unit1_1.csv").read_text().splitlines()[1] == \
        "161229.487,3723.2475,N,12158.3416,W,0.13,120598"
    for line in (tmp_path / "events.jsonl").read_text().splitlines():
        assert set(json.loads(line)) == {"t", "actor", "kind", "detail"}


def test_no_units_only_broadcasts():
    result = run(Scenario([], duration=SECOND), trace=True)
    assert result.tracks == [] and result.summaries == []
    assert len(result.log) == 0  # unheard broadcasts are not logged
    assert len(result.wire_trace) == 40
    assert {line.split()[2] for line in result.wire_trace} == {"bs"}
    assert bytes(int(line.split()[3], 16) for line in result.wire_trace[:4]) == b"free"


def test_trace_does_not_change_outcome():
    sc = load_scenario(demo_scenario_path())
    sc.channel = ChannelConfig(corruption_rate=0.002, rng_seed=9)
    a = run(sc).log.to_jsonl()
    sc.channel = ChannelConfig(corruption_rate=0.002, rng_seed=9)
    assert run(sc, trace=True).log.to_jsonl() == a


def test_out_of_range_unit_keeps_its_track():
    route = [Waypoint(0, 1.0, 1.0, 1.0), Waypoint(10 * SECOND, 1.0, 1.0, 1.0)]
    result = run(Scenario([UnitSpec(4, route)], sample_interval=SECOND, duration=20 * SECOND))
    assert result.tracks == []
    assert result.banks[4].record_count == 11
    assert result.summaries[0].line() == "unit 4: 11 logged, 0 attempts, no contact"


def test_two_units_same_window_are_served_in_turn():
    route = [Waypoint(0, 1.0, 1.0, 1.0), Waypoint(4 * SECOND, 2.0, 2.0, 1.0)]
    sc = Scenario([UnitSpec(9, route, [(10 * SECOND, 30 * SECOND)]),
                   UnitSpec(3, route, [(10 * SECOND, 30 * SECOND)])],
                  sample_interval=SECOND)
    result = run(sc)
    assert [t.unit_id for t in result.tracks] == [3, 9]
    grants = result.log.of_kind("grant")
    assert [g.detail for g in grants] == ["unit=3", "unit=9"]
    assert result.log.of_kind("collision") == []


def test_wire_trace_format():
    result = run(load_scenario(demo_scenario_path()), trace=True)
    first = result.wire_trace[0]
    assert first == "t=0 down bs 0x66"
    ups = [line for line in result.wire_trace if " up u1 " in line]
    assert ups[0].endswith("0x01")  # the unit id


def test_observer_sees_every_event():
    seen = []
    run(load_scenario(demo_scenario_path()), observer=lambda sim, t, actor: seen.append(t))
    assert seen == sorted(seen) and len(seen) > 100


def _fingerprint(result):
    h = hashlib.sha256(result.log.to_jsonl().encode())
    for uid, bank in sorted(result.banks.items()):
        h.update(dump_image(bank))
    for track in result.tracks:
        h.update(track.to_csv().encode())
    return h.hexdigest()


def test_reproducible_with_noise():
    sc, _ = random_fleet(11, max_units=4, max_records=10)
    sc.channel = ChannelConfig(corruption_rate=0.01, rng_seed=5)
    a = run(sc, trace=True)
    sc.channel = ChannelConfig(corruption_rate=0.01, rng_seed=5)
    b = run(sc, trace=True)
    assert _fingerprint(a) == _fingerprint(b)
    assert a.wire_trace == b.wire_trace


def test_noise_is_caught_not_stored():
    # with heavy corruption nothing undecodable may ever be persisted
    sc, _ = random_fleet(3, max_units=3, max_records=20)
    sc.channel = ChannelConfig(corruption_rate=0.02, rng_seed=8)
    result = run(sc)
    for track in result.tracks:
        assert len(track.fixes) == len(track.records)


# -- scenario files -----------------------------------------------------------


def test_parse_scenario_roundtrip():
    sc = parse_scenario("""
        # comment
        sample_interval 30s
        seed 4
        corruption_rate 0.1
        unit 2
        waypoint 0 1.5 -2.5 3
        waypoint 1m 1.6 -2.4 4 120  # with altitude
        rendezvous 2m 3m
    """)
    assert sc.sample_interval == 30 * SECOND
    assert sc.channel.rng_seed == 4 and sc.channel.corruption_rate == 0.1
    (u,) = sc.units
    assert u.unit_id == 2 and u.route[1] == Waypoint(MINUTE, 1.6, -2.4, 4.0, 120.0)
    assert u.rendezvous == [(2 * MINUTE, 3 * MINUTE)]


@pytest.mark.parametrize("text,line,word", [
    ("unit 1\nwaypoint 0 0 0 0\nunit 1\nwaypoint 0 0 0 0\n", 3, "duplicate unit id 1"),
    ("waypoint 0 0 0 0\n", 1, "before any unit"),
    ("bogus 3\n", 1, "unknown setting"),
    ("unit 1\nwaypoint 5 0 0 0\nwaypoint 5 1 1 0\n", 3, "strictly increase"),
    ("unit 1\nwaypoint 0 91 0 0\n", 2, "coordinates"),
    ("unit 300\n", 1, "outside 1..255"),
    ("sample_interval fast\n", 1, "bad duration"),
    ("unit 1\nwaypoint 0 0 0 0\nseed 3\n", 3, "precede"),
])
def test_scenario_errors_carry_line_numbers(text, line, word):
    with pytest.raises(ConfigError) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert word in str(exc.value)


def test_scenario_without_route():
    with pytest.raises(BadRoute):
        parse_scenario("unit 1\nrendezvous 1m 2m\n")


def test_scenario_bad_rendezvous():
    with pytest.raises(ConfigError):
        parse_scenario("unit 1\nwaypoint 0 0 0 0\nrendezvous 2m 1m\n")
