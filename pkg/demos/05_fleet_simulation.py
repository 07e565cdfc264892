"""
A small fleet
=============

Three vehicles log fixes every 30 s, then all return to the depot at the
same time.  The priority slots put them in id order on the channel.
"""

import tempfile

from gpstrack.simkit import MINUTE, SECOND, Scenario, UnitSpec, Waypoint, run, write_outputs

route = [Waypoint(0, 37.3874, -121.9724, 0.0), Waypoint(10 * MINUTE, 37.4400, -121.8800, 28.0)]
depot = (11 * MINUTE, 12 * MINUTE)
sc = Scenario([UnitSpec(uid, route, [depot]) for uid in (7, 2, 12)], sample_interval=30 * SECOND)

result = run(sc)
for s in result.summaries:
    print(s.line())

# The base station log shows one grant at a time
for e in result.log:
    if e.kind in ("grant", "verify_ok", "verify_bad", "collision"):
        print("%10.3f s  %s" % (e.time / SECOND, e.kind), e.detail)

# Same scenario, same bytes
assert run(sc).log.digest() == result.log.digest()

with tempfile.TemporaryDirectory() as out:
    for path in write_outputs(result, out):
        print(path.name, path.stat().st_size, "bytes")
