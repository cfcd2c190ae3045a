import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { ViewerController } from "../src/controller.js";
import type {
  GraphResponse,
  PathResponse,
  RootResponse,
  SuppressionResponse,
} from "../src/types.js";

const tinyGraph: GraphResponse = {
  nodes: [
    { id: 0, pos: [0, 0, 0], radius: 1 },
    { id: 1, pos: [0, 0, 10], radius: 1 },
    { id: 2, pos: [0, 0, 20], radius: 1 },
  ],
  edges: [
    { id: 0, a: 0, b: 1, polyline: [[0, 0, 0], [0, 0, 10]], arc_length: 10, min_radius: 1, mean_radius: 1 },
    { id: 1, a: 1, b: 2, polyline: [[0, 0, 10], [0, 0, 20]], arc_length: 10, min_radius: 1, mean_radius: 1 },
  ],
  components: [[0, 1, 2]],
};

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (v: T) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (v: T) => void;
  const promise = new Promise<T>((r) => (resolve = r));
  return { promise, resolve };
}

/** Mock service whose suppression responses resolve under test control. */
function mockApi() {
  const pending: { d: number; def: Deferred<SuppressionResponse> }[] = [];
  const api = {
    graph: async () => tinyGraph,
    meshText: async () => null,
    setRoot: async (_sid: string, node: number): Promise<RootResponse> => ({
      root: node,
      criterion: "shortest_path",
      nodes_expanded: 3,
      wall_time_s: 0,
      cached: false,
      total_expanded: 3,
    }),
    suppression: (_sid: string, d: number) => {
      const def = deferred<SuppressionResponse>();
      pending.push({ d, def });
      return def.promise;
    },
    path: async (_sid: string, to: number): Promise<PathResponse> => ({
      found: true,
      nodes: [0, 1, to],
      edges: [0, 1],
      total_cost: 20,
      arc_length: 20,
      directions: [],
      reason: null,
    }),
  } as unknown as ApiClient;
  return { api, pending };
}

describe("controller suppression ordering", () => {
  it("a late-arriving older response cannot override a newer one", async () => {
    const { api, pending } = mockApi();
    const ctl = new ViewerController(api, () => {}, { debounceMs: 0 });
    ctl.state = { ...ctl.state, sessionId: "s" };
    await ctl.api.graph("s"); // warm nothing; session wiring below
    ctl.scene = { graph: tinyGraph, mesh: null, anchors: null };
    ctl.state = { ...ctl.state, root: 0 };

    void ctl.issueSuppression(10); // seq 1
    void ctl.issueSuppression(30); // seq 2
    expect(pending).toHaveLength(2);

    // newer response lands first
    pending[1].def.resolve({ d: 30, nodes: [0, 1, 2], edges: [] });
    await Promise.resolve();
    await Promise.resolve();
    expect(ctl.state.visibleNodes.size).toBe(3);

    // the stale one arrives afterwards and must be ignored
    pending[0].def.resolve({ d: 10, nodes: [0], edges: [] });
    await Promise.resolve();
    await Promise.resolve();
    expect(ctl.state.visibleNodes.size).toBe(3);
    expect(ctl.state.suppressionDistance).toBe(30);
  });

  it("debounce issues only the last slider value", async () => {
    const { api, pending } = mockApi();
    const ctl = new ViewerController(api, () => {}, { debounceMs: 5 });
    ctl.scene = { graph: tinyGraph, mesh: null, anchors: null };
    ctl.state = { ...ctl.state, sessionId: "s", root: 0 };
    ctl.sliderChanged(5);
    ctl.sliderChanged(15);
    ctl.sliderChanged(25);
    await new Promise((r) => setTimeout(r, 30));
    expect(pending).toHaveLength(1);
    expect(pending[0].d).toBe(25);
  });
});

describe("controller selection flow", () => {
  it("setRoot then setTarget produces a matching highlighted path", async () => {
    const { api, pending } = mockApi();
    const states: number[] = [];
    const ctl = new ViewerController(api, (s) => states.push(s.visibleNodes.size), {
      debounceMs: 0,
    });
    ctl.scene = { graph: tinyGraph, mesh: null, anchors: null };
    ctl.state = { ...ctl.state, sessionId: "s" };
    const rootDone = ctl.setRoot(0); // suspends on the suppression refresh
    await new Promise((r) => setTimeout(r, 0));
    pending.at(-1)?.def.resolve({ d: 0, nodes: [0], edges: [] });
    await rootDone;
    await ctl.setTarget(2);
    expect(ctl.state.root).toBe(0);
    expect(ctl.state.target).toBe(2);
    expect(ctl.state.path?.found).toBe(true);
    expect(ctl.state.path?.nodes).toEqual([0, 1, 2]);
  });

  it("errors surface as toasts, not exceptions", async () => {
    const toasts: string[] = [];
    const api = {
      setRoot: async () => {
        throw new Error("boom");
      },
    } as unknown as ApiClient;
    const ctl = new ViewerController(api, () => {}, { onToast: (m) => toasts.push(m) });
    ctl.state = { ...ctl.state, sessionId: "s" };
    await ctl.setRoot(0);
    expect(toasts).toEqual(["boom"]);
  });
});
