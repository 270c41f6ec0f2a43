// Steering input: keyboard plus an on-screen joystick, combined into one
// steer sample per animation frame. No input means no message at all.

import type { Steer } from "./protocol.js";

export type JoystickState = { x: number; y: number } | null;

const KEY_VECTORS: Record<string, Steer> = {
  ArrowUp: { vx: 0, vy: 1, omega: 0 },
  ArrowDown: { vx: 0, vy: -1, omega: 0 },
  ArrowLeft: { vx: -1, vy: 0, omega: 0 },
  ArrowRight: { vx: 1, vy: 0, omega: 0 },
  w: { vx: 0, vy: 1, omega: 0 },
  s: { vx: 0, vy: -1, omega: 0 },
  a: { vx: -1, vy: 0, omega: 0 },
  d: { vx: 1, vy: 0, omega: 0 },
  q: { vx: 0, vy: 0, omega: 1 },
  e: { vx: 0, vy: 0, omega: -1 },
};

export function isSteerKey(key: string): boolean {
  return key in KEY_VECTORS;
}

const clamp1 = (v: number) => Math.max(-1, Math.min(1, v));

/** Combine held keys and the joystick into one steer sample, or null. */
export function computeSteer(keys: ReadonlySet<string>, joystick: JoystickState): Steer | null {
  let vx = 0;
  let vy = 0;
  let omega = 0;
  for (const key of keys) {
    const vec = KEY_VECTORS[key];
    if (vec) {
      vx += vec.vx;
      vy += vec.vy;
      omega += vec.omega;
    }
  }
  if (joystick !== null) {
    vx += joystick.x;
    vy += joystick.y;
  }
  vx = clamp1(vx);
  vy = clamp1(vy);
  omega = clamp1(omega);
  if (vx === 0 && vy === 0 && omega === 0) return null;
  return { vx, vy, omega };
}

/** Tracks pressed keys; caller wires the DOM events. */
export class KeyTracker {
  private held = new Set<string>();

  down(key: string): void {
    if (isSteerKey(key)) this.held.add(key);
  }

  up(key: string): void {
    this.held.delete(key);
  }

  clear(): void {
    this.held.clear();
  }

  get keys(): ReadonlySet<string> {
    return this.held;
  }
}

/**
 * Per-frame send gate: at most one steer message per frame, none when idle.
 * While input is held the sample repeats every frame so the server's
 * staleness window always holds a fresh one.
 */
export class SteerPump {
  private sentThisFrame = false;

  frame(): void {
    this.sentThisFrame = false;
  }

  take(steer: Steer | null): Steer | null {
    if (steer === null || this.sentThisFrame) return null;
    this.sentThisFrame = true;
    return steer;
  }
}

/** Map a pointer position on a joystick pad to a unit-box vector. */
export function joystickVector(
  px: number, py: number, cx: number, cy: number, radius: number,
): JoystickState {
  const dx = (px - cx) / radius;
  const dy = (cy - py) / radius; // screen y down, world y up
  const mag = Math.hypot(dx, dy);
  if (mag < 0.1) return null; // center dead zone
  const s = mag > 1 ? 1 / mag : 1;
  return { x: dx * s, y: dy * s };
}
