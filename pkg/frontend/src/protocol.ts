// Wire types for the session protocol (JSON text frames, schema version 1).
// The console only ever renders what the server sent; nothing is simulated
// client-side.

export const PROTOCOL_VERSION = 1;

export type Vec3 = [number, number, number];
export type Point2 = [number, number];

export type SceneData = {
  bounds: [number, number, number, number];
  target: Vec3;
  obstacles: { footprint: Point2[]; z: [number, number] }[];
};

export type ContributionData = {
  xy: [number, number];
  theta: number;
  head: [number, number];
  cone: number;
};

export type AgentRow = {
  rate: number;
  active: boolean;
  last: ContributionData | null;
};

export type FlagsData = {
  converged: boolean;
  distance_ok: boolean;
  visible: boolean;
  aligned: boolean;
  collision_free: boolean;
  distance: number;
  occluded_length: number;
  misalignment: number;
  collision_length: number;
  stalled: boolean;
};

export type BodyData = {
  x: number;
  y: number;
  theta: number;
  head: { alpha: number; beta: number; theta: number };
  cone: number;
  cone_limits: [number, number];
  embodiment: string;
  footprint: Point2[];
  eye: Vec3;
  axis: Vec3;
};

export type StateMessage = {
  v: number;
  type: "state";
  tick: number;
  body: BodyData;
  delta: { pos: number; or: number };
  agents: Record<string, AgentRow>;
  intermediate_target: Vec3 | null;
  outcome: string | null;
  flags?: FlagsData;
  scene?: SceneData;
  name?: string;
  authority?: boolean;
  client?: string;
  diagnostics?: { malformed: number; clients: number };
};

export type TraceEventMessage = {
  v: number;
  type: "trace-event";
  tick: number;
  firings: { agent: string; norm: ContributionData }[];
  controls: unknown[];
  errors: unknown[];
  digest: string;
};

export type EndedMessage = {
  v: number;
  type: "ended";
  outcome: string;
  tick: number;
};

export type ServerMessage = StateMessage | TraceEventMessage | EndedMessage;

export function parseServerMessage(text: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const m = obj as { v?: unknown; type?: unknown };
  if (m.v !== PROTOCOL_VERSION) return null;
  if (m.type === "state" || m.type === "trace-event" || m.type === "ended") {
    return obj as ServerMessage;
  }
  return null;
}

// -- client -> server -------------------------------------------------------

export type Steer = { vx: number; vy: number; omega: number };

const finite = (n: number) => Number.isFinite(n);

export function encodeSteer(s: Steer): string | null {
  if (!finite(s.vx) || !finite(s.vy) || !finite(s.omega)) return null;
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "steer", ...s });
}

export function encodePause(agent: string): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "pause", agent });
}

export function encodeWork(agent: string): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "work", agent });
}

export function encodeRate(agent: string, value: number): string | null {
  if (!Number.isInteger(value) || value < 1) return null;
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "rate", agent, value });
}

export function encodeDelta(which: "pos" | "or", value: number): string | null {
  if (!finite(value) || value <= 0) return null;
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "delta", which, value });
}

export function encodeIntermediateTarget(p: Vec3 | null): string {
  const target = p === null ? null : { x: p[0], y: p[1], z: p[2] };
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "intermediate-target", target });
}

export function encodeEnd(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "end" });
}
