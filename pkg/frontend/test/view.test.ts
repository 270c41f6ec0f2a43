import { describe, expect, it } from "vitest";

import type { ServerMessage, StateMessage } from "../src/protocol.js";
import {
  initialView,
  onConnectionChange,
  onServerMessage,
  panelModel,
} from "../src/view.js";

function stateMessage(overrides: Partial<StateMessage> = {}): StateMessage {
  return {
    v: 1,
    type: "state",
    tick: 3,
    body: {
      x: 0.2, y: -0.1, theta: 0.4, head: { alpha: 0, beta: 0, theta: 0 },
      cone: 0.1, cone_limits: [0.03, 0.44], embodiment: "manikin",
      footprint: [[0, 0], [1, 0], [1, 1]], eye: [0.3, -0.1, 1.6], axis: [1, 0, 0],
    },
    delta: { pos: 0.05, or: 0.05 },
    agents: {
      attraction: { rate: 3, active: true, last: { xy: [0.05, 0], theta: 0, head: [0, 0], cone: 0 } },
      repulsion: { rate: 1, active: false, last: null },
    },
    intermediate_target: null,
    outcome: null,
    ...overrides,
  };
}

describe("view fold", () => {
  it("captures scene and authority from the first snapshot", () => {
    const hello = stateMessage({
      scene: { bounds: [-1, -1, 1, 1], target: [0.5, 0, 1.5], obstacles: [] },
      authority: true,
      name: "demo",
    });
    const view = onServerMessage(initialView(), hello);
    expect(view.scene).not.toBeNull();
    expect(view.authority).toBe(true);
    expect(view.name).toBe("demo");
  });

  it("keeps the scene across later scene-less states", () => {
    const hello = stateMessage({
      scene: { bounds: [-1, -1, 1, 1], target: [0.5, 0, 1.5], obstacles: [] },
      authority: true,
    });
    let view = onServerMessage(initialView(), hello);
    view = onServerMessage(view, stateMessage({ tick: 4 }));
    expect(view.scene).not.toBeNull();
    expect(view.state!.tick).toBe(4);
  });

  it("is stateless across reconnects: replaying the snapshot rebuilds an identical view", () => {
    const hello = stateMessage({
      scene: { bounds: [-1, -1, 1, 1], target: [0.5, 0, 1.5], obstacles: [] },
      authority: true,
    });
    const longLived = [stateMessage({ tick: 1 }), stateMessage({ tick: 2 }), hello]
      .reduce<ReturnType<typeof initialView>>(
        (v, m) => onServerMessage(v, m as ServerMessage), initialView());
    const reconnected = onServerMessage(
      onConnectionChange(initialView(), "open"), hello);
    expect(panelModel(reconnected)).toEqual(panelModel(longLived));
    expect(reconnected.scene).toEqual(longLived.scene);
    expect(reconnected.state).toEqual(longLived.state);
  });

  it("records the ended outcome", () => {
    const view = onServerMessage(initialView(),
      { v: 1, type: "ended", outcome: "converged", tick: 42 });
    expect(view.outcome).toBe("converged");
  });
});

describe("panel model", () => {
  it("reflects only server-acknowledged values", () => {
    let view = onServerMessage(initialView(), stateMessage());
    const before = panelModel(view)!;
    expect(before.rows.find((r) => r.id === "attraction")!.rate).toBe(3);
    // a rate command is in flight; nothing changes until the server acks
    const unchanged = panelModel(view)!;
    expect(unchanged).toEqual(before);
    // the ack arrives as a fresh state message
    const acked = stateMessage();
    acked.agents = { ...acked.agents, attraction: { rate: 5, active: true, last: null } };
    view = onServerMessage(view, acked);
    expect(panelModel(view)!.rows.find((r) => r.id === "attraction")!.rate).toBe(5);
  });

  it("marks paused agents and last-tick firings", () => {
    const view = onServerMessage(initialView(), stateMessage());
    const model = panelModel(view)!;
    const repulsion = model.rows.find((r) => r.id === "repulsion")!;
    expect(repulsion.active).toBe(false);
    expect(repulsion.firedLastTick).toBe(false);
    const attraction = model.rows.find((r) => r.id === "attraction")!;
    expect(attraction.firedLastTick).toBe(true);
  });

  it("is null before the first snapshot", () => {
    expect(panelModel(initialView())).toBeNull();
  });
});
