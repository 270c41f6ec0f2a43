// Master-window control panel: per-agent pause/work and rate, global step
// sliders. Inputs always show the server-acknowledged values from the panel
// model; there is no optimistic local state.

import { encodeDelta, encodePause, encodeRate, encodeWork } from "./protocol.js";
import type { PanelModel } from "./view.js";

export type SendFn = (payload: string | null) => void;

type AgentWidgets = {
  row: HTMLDivElement;
  toggle: HTMLButtonElement;
  rate: HTMLInputElement;
};

export class ControlPanel {
  private agentWidgets = new Map<string, AgentWidgets>();
  private deltaPos: HTMLInputElement;
  private deltaOr: HTMLInputElement;
  private status: HTMLDivElement;
  private agentsBox: HTMLDivElement;

  constructor(private root: HTMLElement, private send: SendFn) {
    this.agentsBox = document.createElement("div");
    this.agentsBox.className = "agents";
    root.appendChild(this.agentsBox);

    this.deltaPos = this.slider("step / move (m)", 0.005, 0.2, 0.005,
      (v) => this.send(encodeDelta("pos", v)));
    this.deltaOr = this.slider("step / turn (rad)", 0.01, 0.3, 0.01,
      (v) => this.send(encodeDelta("or", v)));

    this.status = document.createElement("div");
    this.status.className = "status";
    root.appendChild(this.status);
  }

  private slider(
    label: string, min: number, max: number, step: number,
    onCommit: (value: number) => void,
  ): HTMLInputElement {
    const wrap = document.createElement("label");
    wrap.className = "slider";
    wrap.textContent = label;
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.step = String(step);
    input.addEventListener("change", () => onCommit(Number(input.value)));
    wrap.appendChild(input);
    this.root.appendChild(wrap);
    return input;
  }

  private agentRow(id: string): AgentWidgets {
    const row = document.createElement("div");
    row.className = "agent-row";
    const name = document.createElement("span");
    name.className = "agent-name";
    name.textContent = id;
    const toggle = document.createElement("button");
    const rate = document.createElement("input");
    rate.type = "number";
    rate.min = "1";
    rate.title = "activity rate (ticks between firings)";
    toggle.addEventListener("click", () => {
      // the row's current style reflects the acked state; flip that
      const paused = row.classList.contains("paused");
      this.send(paused ? encodeWork(id) : encodePause(id));
    });
    rate.addEventListener("change", () => {
      this.send(encodeRate(id, Number(rate.value)));
    });
    row.append(name, toggle, rate);
    this.agentsBox.appendChild(row);
    return { row, toggle, rate };
  }

  update(model: PanelModel | null, connection: string): void {
    if (model === null) {
      this.status.textContent = connection;
      return;
    }
    for (const row of model.rows) {
      let w = this.agentWidgets.get(row.id);
      if (w === undefined) {
        w = this.agentRow(row.id);
        this.agentWidgets.set(row.id, w);
      }
      w.row.classList.toggle("paused", !row.active);
      w.row.classList.toggle("fired", row.firedLastTick);
      w.toggle.textContent = row.active ? "pause" : "work";
      if (document.activeElement !== w.rate) {
        w.rate.value = String(row.rate);
      }
    }
    if (document.activeElement !== this.deltaPos) {
      this.deltaPos.value = String(model.deltaPos);
    }
    if (document.activeElement !== this.deltaOr) {
      this.deltaOr.value = String(model.deltaOr);
    }
    const role = model.authority ? "steering" : "observing";
    const end = model.outcome ? ` | ${model.outcome}` : "";
    const stalled = model.stalled ? " | STALLED" : "";
    this.status.textContent = `tick ${model.tick} | ${role}${stalled}${end} | ${connection}`;
  }
}
