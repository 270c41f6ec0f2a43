#!/usr/bin/env python3
"""Plot the plan view of a recorded run: obstacles, trunk trajectory, gaze
at the final tick, target and any intermediate targets.

Usage: python scripts/plot_run.py SCENARIO TRACE [OUT.png]
"""

import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Polygon as MplPolygon

from vantage import scenario as scn
from vantage.body import eye_point, vision_axis, world_footprint
from vantage.scheduler import TickTrace


def main(argv):
    if len(argv) < 3:
        print(__doc__)
        return 64
    sf = scn.load(argv[1])
    trace = TickTrace.read(argv[2])
    out = argv[3] if len(argv) > 3 else f"{sf.name}.png"

    states = list(scn.reconstruct_states(trace, sf))
    xs = [s.body.trunk.x for s in states]
    ys = [s.body.trunk.y for s in states]
    final = states[-1]

    fig, ax = plt.subplots(figsize=(8, 6))
    x0, y0, x1, y1 = sf.scene.bounds
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    for ob in sf.scene.obstacles:
        shade = 0.35 if ob.z[1] >= 1.0 else 0.2
        ax.add_patch(MplPolygon(ob.footprint, closed=True, alpha=shade, color="k"))
    ax.plot(xs, ys, "-", lw=1.0, color="tab:blue", label="trunk path")
    ax.plot(xs[0], ys[0], "o", color="tab:blue")
    ax.add_patch(MplPolygon(world_footprint(final.body), closed=True,
                            fill=False, color="tab:blue"))
    tx, ty, _ = sf.scene.target
    ax.plot(tx, ty, "*", ms=14, color="tab:orange", label="target")
    for ev in sf.intermediate_targets:
        if ev.point is not None:
            ax.plot(ev.point[0], ev.point[1], "x", ms=10, color="tab:purple")
    eye = eye_point(final.body)
    axis = vision_axis(final.body)
    ax.annotate("", xy=(eye[0] + axis[0], eye[1] + axis[1]), xytext=(eye[0], eye[1]),
                arrowprops=dict(arrowstyle="->", color="tab:green"))
    ax.set_title(f"{sf.name}: {trace.outcome} in {len(trace.entries)} ticks")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(out, dpi=130, bbox_inches="tight")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
