import { ApiClient } from "./api.js";
import type { Camera } from "./projection.js";
import { pickNode } from "./projection.js";
import type { Scene } from "./scene.js";
import { buildScene } from "./scene.js";
import {
  applySuppression,
  clampDistance,
  initialState,
  toggleLabelOverlay,
  withLabels,
  withPath,
  withRoot,
  withSession,
  type ViewState,
} from "./state.js";
import type { PhantomRequest } from "./types.js";

export interface ControllerOptions {
  /** slider debounce in ms; 0 issues immediately (used by tests) */
  debounceMs?: number;
  onToast?: (message: string) => void;
}

/** Owns the view state and talks to the service. All state changes flow
 *  through `onChange`, so the host (DOM or test) re-renders after each. */
export class ViewerController {
  state: ViewState = initialState();
  scene: Scene | null = null;

  private seq = 0;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly debounceMs: number;
  private readonly onToast: (m: string) => void;

  constructor(
    readonly api: ApiClient,
    private onChange: (s: ViewState) => void,
    opts: ControllerOptions = {},
  ) {
    this.debounceMs = opts.debounceMs ?? 120;
    this.onToast = opts.onToast ?? (() => {});
  }

  private update(next: ViewState): void {
    this.state = next;
    this.onChange(next);
  }

  private toastError(err: unknown): void {
    this.onToast(err instanceof Error ? err.message : String(err));
  }

  async createPhantomSession(phantom: PhantomRequest): Promise<void> {
    const created = await this.api.createPhantomSession(phantom);
    await this.loadSession(created.session_id);
  }

  async loadSession(sessionId: string): Promise<void> {
    const graph = await this.api.graph(sessionId);
    const meshText = await this.api.meshText(sessionId);
    this.scene = buildScene(graph, meshText);
    this.update(withSession(this.state, sessionId));
  }

  /** Slider input: debounced, sequence-numbered; stale responses can never
   *  override newer ones. */
  sliderChanged(d: number): void {
    const dist = clampDistance(d);
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    if (this.debounceMs === 0) {
      void this.issueSuppression(dist);
      return;
    }
    this.debounceTimer = setTimeout(() => void this.issueSuppression(dist), this.debounceMs);
  }

  async issueSuppression(d: number): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid || this.state.root === null) return;
    const seq = ++this.seq;
    try {
      const resp = await this.api.suppression(sid, d);
      this.update(applySuppression(this.state, seq, resp));
    } catch (err) {
      this.toastError(err);
    }
  }

  async setRoot(node: number): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    try {
      await this.api.setRoot(sid, node);
      this.update(withRoot(this.state, node));
      await this.issueSuppression(this.state.suppressionDistance);
    } catch (err) {
      this.toastError(err);
    }
  }

  async setTarget(node: number): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid || this.state.root === null) return;
    try {
      const path = await this.api.path(sid, node);
      this.update(withPath(this.state, node, path));
      if (!path.found) this.onToast(`no path: ${path.reason ?? "unreachable"}`);
    } catch (err) {
      this.toastError(err);
    }
  }

  /** Canvas click: nearest skeleton node within the pick radius becomes the
   *  root or the target. */
  async clickAt(
    sx: number,
    sy: number,
    cam: Camera,
    width: number,
    height: number,
    mode: "root" | "target",
  ): Promise<void> {
    if (!this.scene) return;
    const nodes = this.scene.graph.nodes;
    const hit = pickNode(
      nodes.map((n) => n.pos),
      nodes.map((n) => n.id),
      cam,
      width,
      height,
      sx,
      sy,
    );
    if (hit === null) return;
    if (mode === "root") await this.setRoot(hit);
    else await this.setTarget(hit);
  }

  async toggleLabels(): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    if (this.state.labels) {
      this.update(toggleLabelOverlay(this.state));
      return;
    }
    try {
      const labels = await this.api.labels(sid);
      this.update(withLabels(this.state, labels));
    } catch (err) {
      this.toastError(err);
    }
  }
}
