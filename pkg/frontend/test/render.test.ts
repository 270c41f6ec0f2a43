import { describe, expect, it } from "vitest";

import type { SceneData, StateMessage } from "../src/protocol.js";
import { COLORS, coneWedge, Ctx2D, planTransform, renderPlanView } from "../src/render.js";
import { initialView, onServerMessage } from "../src/view.js";

type Op = { op: string; args: unknown[]; stroke?: unknown; fill?: unknown };

/** Recording stub standing in for a canvas 2D context. */
function recordingCtx(): { ctx: Ctx2D; ops: Op[] } {
  const ops: Op[] = [];
  const ctx = {
    fillStyle: "" as string,
    strokeStyle: "" as string,
    lineWidth: 1,
    globalAlpha: 1,
    font: "",
    beginPath: () => ops.push({ op: "beginPath", args: [] }),
    moveTo: (...args: unknown[]) => ops.push({ op: "moveTo", args }),
    lineTo: (...args: unknown[]) => ops.push({ op: "lineTo", args }),
    closePath: () => ops.push({ op: "closePath", args: [] }),
    arc: (...args: unknown[]) => ops.push({ op: "arc", args }),
    rect: (...args: unknown[]) => ops.push({ op: "rect", args }),
    fill: () => ops.push({ op: "fill", args: [], fill: ctx.fillStyle }),
    stroke: () => ops.push({ op: "stroke", args: [], stroke: ctx.strokeStyle }),
    fillRect: (...args: unknown[]) => ops.push({ op: "fillRect", args, fill: ctx.fillStyle }),
    clearRect: (...args: unknown[]) => ops.push({ op: "clearRect", args }),
    fillText: (...args: unknown[]) => ops.push({ op: "fillText", args }),
  };
  return { ctx, ops };
}

const SCENE: SceneData = {
  bounds: [-2, -2, 2, 2],
  target: [1, 0, 1.5],
  obstacles: [
    { footprint: [[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]], z: [0, 2] },
  ],
};

function stateMessage(overrides: Partial<StateMessage> = {}): StateMessage {
  return {
    v: 1,
    type: "state",
    tick: 12,
    body: {
      x: -1, y: 0, theta: 0, head: { alpha: 0.2, beta: 0, theta: 0 },
      cone: 0.2, cone_limits: [0.03, 0.44], embodiment: "manikin",
      footprint: [[-1.2, -0.2], [-0.8, -0.2], [-0.8, 0.2], [-1.2, 0.2]],
      eye: [-0.9, 0, 1.6], axis: [1, 0, 0],
    },
    delta: { pos: 0.05, or: 0.05 },
    agents: { attraction: { rate: 1, active: true, last: null } },
    intermediate_target: null,
    outcome: null,
    flags: {
      converged: false, distance_ok: false, visible: true, aligned: true,
      collision_free: true, distance: 2, occluded_length: 0, misalignment: 0,
      collision_length: 0, stalled: false,
    },
    ...overrides,
  };
}

function viewWith(msg: StateMessage) {
  return onServerMessage(initialView(), { ...msg, scene: SCENE });
}

describe("planTransform", () => {
  it("round-trips world and screen coordinates", () => {
    const t = planTransform(SCENE, 800, 600);
    const [sx, sy] = t.toScreen([0.7, -1.1]);
    const [wx, wy] = t.toWorld([sx, sy]);
    expect(wx).toBeCloseTo(0.7, 9);
    expect(wy).toBeCloseTo(-1.1, 9);
  });

  it("keeps the scene inside the viewport", () => {
    const t = planTransform(SCENE, 800, 600);
    for (const corner of [[-2, -2], [2, 2]] as [number, number][]) {
      const [x, y] = t.toScreen(corner);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(800);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(600);
    }
  });
});

describe("renderPlanView", () => {
  it("draws obstacles, body, cone sector and the sight line", () => {
    const { ctx, ops } = recordingCtx();
    renderPlanView(ctx, viewWith(stateMessage()), 800, 600);
    const fills = ops.filter((o) => o.op === "fill").map((o) => o.fill);
    expect(fills).toContain(COLORS.obstacle);
    expect(fills).toContain(COLORS.target);
    expect(fills).toContain(COLORS.cone);
    const strokes = ops.filter((o) => o.op === "stroke").map((o) => o.stroke);
    expect(strokes).toContain(COLORS.body);
    expect(strokes).toContain(COLORS.sightVisible);
  });

  it("colors the sight line by occlusion status", () => {
    const msg = stateMessage();
    msg.flags = { ...msg.flags!, visible: false };
    const { ctx, ops } = recordingCtx();
    renderPlanView(ctx, viewWith(msg), 800, 600);
    const strokes = ops.filter((o) => o.op === "stroke").map((o) => o.stroke);
    expect(strokes).toContain(COLORS.sightBlocked);
    expect(strokes).not.toContain(COLORS.sightVisible);
  });

  it("spans the cone sector across twice the half angle", () => {
    const wedge = coneWedge(stateMessage());
    expect(wedge.span).toBeCloseTo(0.4, 12);
    const msg = stateMessage();
    msg.body.cone = 0.44; // at the max aperture
    expect(coneWedge(msg).span).toBeCloseTo(0.88, 12);
  });

  it("marks an intermediate target when one is set", () => {
    const msg = stateMessage({ intermediate_target: [0.5, 0.5, 1.5] });
    const { ctx, ops } = recordingCtx();
    renderPlanView(ctx, viewWith(msg), 800, 600);
    const fills = ops.filter((o) => o.op === "fill").map((o) => o.fill);
    expect(fills).toContain(COLORS.intermediate);
  });

  it("renders a placeholder before any state arrives", () => {
    const { ctx, ops } = recordingCtx();
    renderPlanView(ctx, initialView(), 800, 600);
    const texts = ops.filter((o) => o.op === "fillText");
    expect(texts.length).toBeGreaterThan(0);
  });
});
