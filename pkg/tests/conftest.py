import hypothesis.strategies as st
import pytest

from gpstrack.nmea import GpsFix

# Reference receiver output.  RMC is the short form with a single trailing
# comma; its claimed checksum (0x10) only matches the receiver-manual form
# with two empty trailing fields, RMC_FULL below.
RMC = "$GPRMC,161229.487,A,3723.2475,N,12158.3416,W,0.13,309.62,120598,*10"
RMC_FULL = "$GPRMC,161229.487,A,3723.2475,N,12158.3416,W,0.13,309.62,120598,,*10"
GGA = "$GPGGA,161229.487,3723.2475,N,12158.3416,W,1,07,1.0,9.0,M,,,,0000*18"
GLL = "$GPGLL,3723.2475,N,12158.3416,W,161229.487,A*2C"

# one receiver burst: GGA, GLL, RMC in that order
GPS_BURST = "\r\n".join([GGA, GLL, RMC_FULL]) + "\r\n"

# filled in by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []

SAMPLE_FIX = GpsFix("161229.487", "3723.2475", "N", "12158.3416", "W", "0.13", "120598", True)
GOLDEN_RECORD = b"161229.4873723.2475N12158.3416W0.13  120598"


def xor_oracle(payload: str) -> int:
    """Checksum computed the slow way, one character at a time."""
    acc = 0
    for ch in payload:
        acc = acc ^ ord(ch)
    return acc


def digits(n):
    return st.text("0123456789", min_size=n, max_size=n)


@st.composite
def fixes(draw, max_speed_len=6):
    time_utc = draw(digits(6)) + "." + draw(digits(3))
    lat = draw(digits(4)) + "." + draw(digits(4))
    lon = draw(digits(5)) + "." + draw(digits(4))
    whole = draw(st.text("0123456789", min_size=1, max_size=max_speed_len))
    room = max_speed_len - len(whole) - 1
    if room > 0 and draw(st.booleans()):
        whole += "." + draw(st.text("0123456789", min_size=1, max_size=room))
    return GpsFix(
        time_utc,
        lat,
        draw(st.sampled_from("NS")),
        lon,
        draw(st.sampled_from("EW")),
        whole,
        draw(digits(6)),
        True,
    )


@pytest.fixture
def sample_fix():
    return SAMPLE_FIX


def random_fleet(seed, max_units=20, max_records=95):
    """A lossless scenario: units log 1 fix/s, then all meet the base station.

    Each unit logs between 1 and ``max_records`` fixes.  Rendezvous windows
    open once every unit has finished logging and stay open long enough for
    the whole fleet to download one after another.
    """
    import random

    from gpstrack.simkit import MS, SECOND, Scenario, UnitSpec, Waypoint

    rng = random.Random(seed)
    ids = rng.sample(range(1, 256), rng.randint(1, max_units))
    plans = []
    for uid in ids:
        n = rng.randint(1, max_records)
        route = [
            Waypoint(0, rng.uniform(-60, 60), rng.uniform(-170, 170), rng.uniform(0, 50)),
            Waypoint((n - 1) * SECOND + 1, rng.uniform(-60, 60), rng.uniform(-170, 170), rng.uniform(0, 50)),
        ]
        plans.append((uid, n, route))
    opens = max(n for _, n, _ in plans) * SECOND + 2 * SECOND
    work = sum(uid * 10 * MS + n * 50 * MS + SECOND for uid, n, _ in plans)
    close = opens + 5 * SECOND + work
    units = [UnitSpec(uid, route, [(opens + rng.randint(0, 3) * SECOND, close)]) for uid, n, route in plans]
    expected = {uid: n for uid, n, _ in plans}
    return Scenario(units, sample_interval=SECOND, duration=close + SECOND), expected


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
