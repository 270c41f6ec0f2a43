// Plan-view renderer. Draws against a minimal 2D-context interface so tests
// can record the calls without a DOM. Head pitch (the one non-planar joint)
// is shown as a side gauge.

import type { SessionView } from "./view.js";
import type { Point2, SceneData, StateMessage } from "./protocol.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number, ccw?: boolean): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export type PlanTransform = {
  toScreen(p: Point2): Point2;
  toWorld(p: Point2): Point2;
  scale: number;
};

export const COLORS = {
  background: "#10141a",
  bounds: "#2a3342",
  obstacle: "#4a5a74",
  obstacleLow: "#37455c",
  body: "#64d2ff",
  target: "#ffd166",
  intermediate: "#c084fc",
  axis: "#9be564",
  cone: "rgba(155, 229, 100, 0.15)",
  sightVisible: "#3ddc84",
  sightBlocked: "#ff5c5c",
  text: "#c9d4e3",
};

const MARGIN = 24;

export function planTransform(
  scene: SceneData, width: number, height: number,
): PlanTransform {
  const [x0, y0, x1, y1] = scene.bounds;
  const sx = (width - 2 * MARGIN) / (x1 - x0);
  const sy = (height - 2 * MARGIN) / (y1 - y0);
  const scale = Math.min(sx, sy);
  const cx = (x0 + x1) / 2;
  const cy = (y0 + y1) / 2;
  return {
    toScreen: ([x, y]) => [
      width / 2 + (x - cx) * scale,
      height / 2 - (y - cy) * scale,
    ],
    toWorld: ([px, py]) => [
      cx + (px - width / 2) / scale,
      cy - (py - height / 2) / scale,
    ],
    scale,
  };
}

function tracePolygon(ctx: Ctx2D, t: PlanTransform, poly: Point2[]): void {
  ctx.beginPath();
  poly.forEach((p, i) => {
    const [x, y] = t.toScreen(p);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.closePath();
}

function drawScene(ctx: Ctx2D, t: PlanTransform, scene: SceneData): void {
  const [x0, y0, x1, y1] = scene.bounds;
  tracePolygon(ctx, t, [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]);
  ctx.strokeStyle = COLORS.bounds;
  ctx.lineWidth = 1;
  ctx.stroke();
  for (const ob of scene.obstacles) {
    tracePolygon(ctx, t, ob.footprint);
    // low furniture reads lighter than full-height walls
    ctx.fillStyle = ob.z[1] >= 1.0 ? COLORS.obstacle : COLORS.obstacleLow;
    ctx.fill();
  }
}

function drawMarker(ctx: Ctx2D, t: PlanTransform, p: Point2, color: string, r: number): void {
  const [x, y] = t.toScreen(p);
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fillStyle = color;
  ctx.fill();
}

function drawBody(ctx: Ctx2D, t: PlanTransform, state: StateMessage): void {
  const body = state.body;
  tracePolygon(ctx, t, body.footprint);
  ctx.strokeStyle = COLORS.body;
  ctx.lineWidth = 2;
  ctx.stroke();
  drawMarker(ctx, t, [body.eye[0], body.eye[1]], COLORS.body, 3);
}

export function coneWedge(state: StateMessage): { start: number; span: number } {
  // plan projection of the view cone: sector around the gaze azimuth
  const azimuth = Math.atan2(state.body.axis[1], state.body.axis[0]);
  return { start: azimuth - state.body.cone, span: 2 * state.body.cone };
}

function drawGaze(ctx: Ctx2D, t: PlanTransform, state: StateMessage, scene: SceneData): void {
  const body = state.body;
  const eye: Point2 = [body.eye[0], body.eye[1]];
  const aim = state.intermediate_target ?? scene.target;
  const range = Math.hypot(aim[0] - eye[0], aim[1] - eye[1]) || 1.0;
  const [ex, ey] = t.toScreen(eye);
  const wedge = coneWedge(state);
  ctx.beginPath();
  ctx.moveTo(ex, ey);
  // canvas y is flipped, so world angles run clockwise on screen
  ctx.arc(ex, ey, range * t.scale, -wedge.start - wedge.span, -wedge.start);
  ctx.closePath();
  ctx.fillStyle = COLORS.cone;
  ctx.fill();

  const axisEnd = t.toScreen([
    eye[0] + body.axis[0] * range,
    eye[1] + body.axis[1] * range,
  ]);
  ctx.beginPath();
  ctx.moveTo(ex, ey);
  ctx.lineTo(axisEnd[0], axisEnd[1]);
  ctx.strokeStyle = COLORS.axis;
  ctx.lineWidth = 1;
  ctx.stroke();

  const visible = state.flags ? state.flags.visible : true;
  const [tx, ty] = t.toScreen([scene.target[0], scene.target[1]]);
  ctx.beginPath();
  ctx.moveTo(ex, ey);
  ctx.lineTo(tx, ty);
  ctx.strokeStyle = visible ? COLORS.sightVisible : COLORS.sightBlocked;
  ctx.lineWidth = 2;
  ctx.stroke();
}

function drawPitchGauge(ctx: Ctx2D, state: StateMessage, width: number, height: number): void {
  const gaugeH = height * 0.4;
  const x = width - 14;
  const y0 = height / 2 - gaugeH / 2;
  ctx.fillStyle = COLORS.bounds;
  ctx.fillRect(x, y0, 6, gaugeH);
  const alpha = state.body.head.alpha;
  const frac = Math.max(-1, Math.min(1, alpha / (Math.PI / 2)));
  ctx.fillStyle = COLORS.axis;
  ctx.fillRect(x - 2, y0 + gaugeH / 2 - frac * (gaugeH / 2) - 2, 10, 4);
  ctx.fillStyle = COLORS.text;
  ctx.font = "10px sans-serif";
  ctx.fillText("pitch", x - 18, y0 - 6);
}

export function renderPlanView(
  ctx: Ctx2D, view: SessionView, width: number, height: number,
): void {
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, width, height);
  if (view.scene === null || view.state === null) {
    ctx.fillStyle = COLORS.text;
    ctx.font = "14px sans-serif";
    ctx.fillText(view.connection === "closed" ? "disconnected" : "waiting for session...",
      20, 30);
    return;
  }
  const t = planTransform(view.scene, width, height);
  drawScene(ctx, t, view.scene);
  drawMarker(ctx, t, [view.scene.target[0], view.scene.target[1]], COLORS.target, 5);
  const it = view.state.intermediate_target;
  if (it !== null) {
    drawMarker(ctx, t, [it[0], it[1]], COLORS.intermediate, 5);
  }
  drawGaze(ctx, t, view.state, view.scene);
  drawBody(ctx, t, view.state);
  drawPitchGauge(ctx, view.state, width, height);
  ctx.fillStyle = COLORS.text;
  ctx.font = "12px monospace";
  const flags = view.state.flags;
  const status = view.outcome
    ?? (flags?.stalled ? "stalled (rescue me)" : `tick ${view.state.tick}`);
  ctx.fillText(status, 10, height - 10);
  if (!view.authority) {
    ctx.fillText("observer (no steering authority)", 10, height - 26);
  }
}
