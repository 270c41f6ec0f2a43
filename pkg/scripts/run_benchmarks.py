#!/usr/bin/env python3
"""Run every bundled scenario (and the pocket rescue variants), print a
metrics table and verify each trace replays digest-exact."""

import sys
import time
from dataclasses import replace

from vantage import scenario as scn
from vantage.scheduler import replay


def run(sf):
    session = scn.build(sf)
    sched = session.make_scheduler()
    t0 = time.perf_counter()
    result = sched.run()
    elapsed = time.perf_counter() - t0
    verdict = replay(result.trace, scn.build(sf).make_scheduler(with_schedule=False))
    m = scn.metrics(result.trace, sf)
    return result, m, elapsed, verdict


def variants():
    for name in scn.bundled_names():
        yield name, scn.load(name)
    pocket = scn.load("concave-pocket")
    agents = tuple(replace(a, script="concave-pocket.ops") if a.kind == "operator" else a
                   for a in pocket.agents)
    yield "concave-pocket+script", replace(pocket, agents=agents)
    yield "concave-pocket+target", replace(pocket, intermediate_targets=(
        scn.TargetEvent(10, (1.5, 1.7, 1.6)), scn.TargetEvent(300, None)))


def main() -> int:
    header = (f"{'scenario':24} {'outcome':10} {'ticks':>6} {'wall s':>7} "
              f"{'path m':>7} {'coll':>5} {'cone deg':>8} {'replay':>7}")
    print(header)
    print("-" * len(header))
    failures = 0
    for label, sf in variants():
        result, m, elapsed, verdict = run(sf)
        ok = "ok" if verdict.ok else "FAIL"
        if not verdict.ok:
            failures += 1
        print(f"{label:24} {result.outcome:10} {result.ticks:6d} {elapsed:7.2f} "
              f"{m.path_length:7.3f} {m.collision_ticks:5d} "
              f"{m.final_cone * 57.29577951308232:8.2f} {ok:>7}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
