// End-to-end check against a live service: builds the occluded phantom
// session and verifies the interactive contract the UI relies on.

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ViewerController } from "../src/controller.js";
import { fitCamera } from "../src/projection.js";
import { renderScene, type Draw2D } from "../src/render.js";
import { labelPanelLines } from "../src/state.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

function stubContext(): Draw2D {
  return {
    clearRect: () => {},
    beginPath: () => {},
    moveTo: () => {},
    lineTo: () => {},
    closePath: () => {},
    stroke: () => {},
    fill: () => {},
    arc: () => {},
    rect: () => {},
    fillText: () => {},
    strokeStyle: "",
    fillStyle: "",
    lineWidth: 1,
    font: "",
    globalAlpha: 1,
  };
}

let server: ChildProcess;

async function waitForServer(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/v1/sessions/none/graph`);
      if (res.status === 404) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn("vesseltree", ["serve", "--port", String(PORT)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  await waitForServer();
}, 90_000);

afterAll(() => {
  server?.kill();
});

describe("viewer against the live service (occluded phantom)", () => {
  const api = new ApiClient(BASE);
  const ctl = new ViewerController(api, () => {}, { debounceMs: 0 });

  it("builds the occluded phantom session", async () => {
    await ctl.createPhantomSession({
      seed: 5,
      lvo_scenario: { vessel: "MCA_L", fraction_start: 0.4 },
    });
    expect(ctl.scene).not.toBeNull();
    expect(ctl.scene!.graph.nodes.length).toBeGreaterThan(4);
    expect(ctl.scene!.mesh).not.toBeNull();
  }, 120_000);

  it("slider at d=0 renders exactly one node (the root)", async () => {
    const main = ctl.scene!.graph.components[0];
    await ctl.setRoot(main[0]);
    await ctl.issueSuppression(0);
    const cam = fitCamera(ctl.scene!.graph.nodes.map((n) => n.pos), 800, 600);
    const stats = renderScene(stubContext(), 800, 600, ctl.scene!, ctl.state, cam);
    expect(ctl.state.visibleNodes.size).toBe(1);
    expect(stats.nodesDrawn).toBe(1);
  }, 30_000);

  it("monotone slider sweep never shrinks the rendered set", async () => {
    const cam = fitCamera(ctl.scene!.graph.nodes.map((n) => n.pos), 800, 600);
    let prevNodes = new Set<number>();
    let prevDrawn = 0;
    for (const d of [0, 10, 25, 50, 100, 200, 1e9]) {
      await ctl.issueSuppression(d);
      for (const n of prevNodes) expect(ctl.state.visibleNodes.has(n)).toBe(true);
      const stats = renderScene(stubContext(), 800, 600, ctl.scene!, ctl.state, cam);
      expect(stats.nodesDrawn).toBeGreaterThanOrEqual(prevDrawn);
      prevNodes = new Set(ctl.state.visibleNodes);
      prevDrawn = stats.nodesDrawn;
    }
    expect(prevNodes.size).toBe(ctl.scene!.graph.components[0].length);
  }, 30_000);

  it("selecting a target renders a path without any new graph search", async () => {
    const sid = ctl.state.sessionId!;
    const before = (await api.stats(sid)).total_expanded;
    const main = ctl.scene!.graph.components[0];
    const target = main[main.length - 1];
    await ctl.setTarget(target);
    expect(ctl.state.path?.found).toBe(true);
    const cam = fitCamera(ctl.scene!.graph.nodes.map((n) => n.pos), 800, 600);
    const stats = renderScene(stubContext(), 800, 600, ctl.scene!, ctl.state, cam);
    expect(stats.pathDrawn).toBe(true);
    const after = (await api.stats(sid)).total_expanded;
    expect(after).toBe(before); // cached lookup only
  }, 30_000);

  it("label panel shows the MCA verdict with its slope", async () => {
    await ctl.toggleLabels();
    const lines = labelPanelLines(ctl.state.labels);
    const mcal = lines.find((l) => l.startsWith("MCA_L"));
    expect(mcal).toBeDefined();
    expect(mcal).toContain("ABSENT");
    expect(mcal).toMatch(/slope=-?\d+\.\d+/);
    expect(lines.at(-1)).toContain("LVO POSITIVE");
  }, 30_000);
});
