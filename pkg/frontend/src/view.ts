// Session view model: a pure fold over server messages. Everything the
// console shows comes from the latest state message, so reconnecting and
// replaying the server snapshot rebuilds the identical view.

import type {
  AgentRow,
  SceneData,
  ServerMessage,
  StateMessage,
  TraceEventMessage,
} from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export type SessionView = {
  connection: Connection;
  scene: SceneData | null;
  name: string;
  state: StateMessage | null;
  authority: boolean;
  outcome: string | null;
  lastTrace: TraceEventMessage | null;
};

export function initialView(): SessionView {
  return {
    connection: "connecting",
    scene: null,
    name: "",
    state: null,
    authority: false,
    outcome: null,
    lastTrace: null,
  };
}

export function onConnectionChange(view: SessionView, connection: Connection): SessionView {
  return { ...view, connection };
}

export function onServerMessage(view: SessionView, msg: ServerMessage): SessionView {
  if (msg.type === "state") {
    return {
      ...view,
      scene: msg.scene ?? view.scene,
      name: msg.name ?? view.name,
      state: msg,
      authority: msg.authority ?? view.authority,
      outcome: msg.outcome ?? view.outcome,
    };
  }
  if (msg.type === "trace-event") {
    return { ...view, lastTrace: msg };
  }
  return { ...view, outcome: msg.outcome };
}

// -- control panel model ------------------------------------------------------
// Controls render the server-acknowledged values only; a command the server
// has not yet folded into a state message is invisible here.

export type PanelRow = {
  id: string;
  rate: number;
  active: boolean;
  firedLastTick: boolean;
};

export type PanelModel = {
  rows: PanelRow[];
  deltaPos: number;
  deltaOr: number;
  authority: boolean;
  tick: number;
  outcome: string | null;
  stalled: boolean;
};

export function panelModel(view: SessionView): PanelModel | null {
  const s = view.state;
  if (s === null) return null;
  const rows = Object.entries(s.agents).map(([id, row]: [string, AgentRow]) => ({
    id,
    rate: row.rate,
    active: row.active,
    firedLastTick: row.last !== null,
  }));
  rows.sort((a, b) => a.id.localeCompare(b.id));
  return {
    rows,
    deltaPos: s.delta.pos,
    deltaOr: s.delta.or,
    authority: view.authority,
    tick: s.tick,
    outcome: view.outcome,
    stalled: s.flags?.stalled ?? false,
  };
}
