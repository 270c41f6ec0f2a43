// Console entry point: wires the socket, view fold, canvas, controls,
// keyboard/joystick steering and intermediate-target placement.

import { ControlPanel } from "./controls.js";
import {
  computeSteer,
  isSteerKey,
  joystickVector,
  JoystickState,
  KeyTracker,
  SteerPump,
} from "./input.js";
import {
  encodeIntermediateTarget,
  encodeSteer,
  parseServerMessage,
} from "./protocol.js";
import { planTransform, renderPlanView } from "./render.js";
import { defaultSessionUrl, SessionSocket } from "./socket.js";
import { initialView, onConnectionChange, onServerMessage, panelModel } from "./view.js";

const canvas = document.getElementById("plan") as HTMLCanvasElement;
const panelRoot = document.getElementById("panel") as HTMLElement;
const pad = document.getElementById("joystick") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const padCtx = pad.getContext("2d")!;

let view = initialView();
const keys = new KeyTracker();
let joystick: JoystickState = null;
const pump = new SteerPump();

const socket = new SessionSocket(defaultSessionUrl(window.location), {
  onText(text) {
    const msg = parseServerMessage(text);
    if (msg !== null) view = onServerMessage(view, msg);
  },
  onStatus(open) {
    view = onConnectionChange(open ? { ...initialView(), connection: "open" } : view,
      open ? "open" : "closed");
    if (!open) keys.clear();
  },
});
socket.connect();

const panel = new ControlPanel(panelRoot, (payload) => {
  if (view.authority) socket.send(payload);
});

window.addEventListener("keydown", (ev) => {
  if (isSteerKey(ev.key)) {
    keys.down(ev.key);
    ev.preventDefault();
  }
});
window.addEventListener("keyup", (ev) => keys.up(ev.key));
window.addEventListener("blur", () => keys.clear());

// -- joystick pad --------------------------------------------------------

function padCenter(): { cx: number; cy: number; r: number } {
  return { cx: pad.width / 2, cy: pad.height / 2, r: pad.width / 2 - 8 };
}

function padPointer(ev: PointerEvent): void {
  const rect = pad.getBoundingClientRect();
  const { cx, cy, r } = padCenter();
  joystick = joystickVector(ev.clientX - rect.left, ev.clientY - rect.top, cx, cy, r);
}

pad.addEventListener("pointerdown", (ev) => {
  pad.setPointerCapture(ev.pointerId);
  padPointer(ev);
});
pad.addEventListener("pointermove", (ev) => {
  if (joystick !== null || ev.buttons > 0) padPointer(ev);
});
const releasePad = () => {
  joystick = null;
};
pad.addEventListener("pointerup", releasePad);
pad.addEventListener("pointercancel", releasePad);

function drawPad(): void {
  const { cx, cy, r } = padCenter();
  padCtx.clearRect(0, 0, pad.width, pad.height);
  padCtx.beginPath();
  padCtx.arc(cx, cy, r, 0, 2 * Math.PI);
  padCtx.strokeStyle = "#2a3342";
  padCtx.lineWidth = 2;
  padCtx.stroke();
  const j = joystick ?? { x: 0, y: 0 };
  padCtx.beginPath();
  padCtx.arc(cx + j.x * r * 0.8, cy - j.y * r * 0.8, 10, 0, 2 * Math.PI);
  padCtx.fillStyle = joystick ? "#64d2ff" : "#4a5a74";
  padCtx.fill();
}

// -- intermediate target placement ------------------------------------------

canvas.addEventListener("click", (ev) => {
  if (!view.authority || view.scene === null || view.state === null) return;
  const rect = canvas.getBoundingClientRect();
  const t = planTransform(view.scene, canvas.width, canvas.height);
  const world = t.toWorld([ev.clientX - rect.left, ev.clientY - rect.top]);
  const current = view.state.intermediate_target;
  const nearCurrent = current !== null
    && Math.hypot(world[0] - current[0], world[1] - current[1]) < 12 / t.scale;
  if (nearCurrent) {
    socket.send(encodeIntermediateTarget(null)); // second activation clears
  } else {
    socket.send(encodeIntermediateTarget([world[0], world[1], view.scene.target[2]]));
  }
});

// -- frame loop ---------------------------------------------------------------

function frame(): void {
  pump.frame();
  if (view.authority) {
    const steer = pump.take(computeSteer(keys.keys, joystick));
    if (steer !== null) socket.send(encodeSteer(steer));
  }
  renderPlanView(ctx, view, canvas.width, canvas.height);
  panel.update(panelModel(view), view.connection);
  drawPad();
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
