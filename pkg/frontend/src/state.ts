import type { LabelsResponse, PathResponse, SuppressionResponse } from "./types.js";

/** Immutable view state; every transition returns a new object so the render
 *  loop can diff by identity. */
export interface ViewState {
  sessionId: string | null;
  root: number | null;
  target: number | null;
  suppressionDistance: number;
  /** false until the first suppression response arrives; everything renders */
  suppressionActive: boolean;
  visibleNodes: ReadonlySet<number>;
  edgeFractions: ReadonlyMap<number, number>;
  path: PathResponse | null;
  labelsVisible: boolean;
  labels: LabelsResponse | null;
  /** sequence number of the newest applied suppression response */
  appliedSeq: number;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    root: null,
    target: null,
    suppressionDistance: 0,
    suppressionActive: false,
    visibleNodes: new Set(),
    edgeFractions: new Map(),
    path: null,
    labelsVisible: false,
    labels: null,
    appliedSeq: 0,
  };
}

export function clampDistance(d: number): number {
  return Number.isFinite(d) && d > 0 ? d : 0;
}

export function withSession(s: ViewState, sessionId: string): ViewState {
  return { ...initialState(), sessionId };
}

/** New root invalidates the highlighted path and the suppression sets, which
 *  are relative to the old root. */
export function withRoot(s: ViewState, root: number): ViewState {
  return {
    ...s,
    root,
    target: null,
    path: null,
    suppressionActive: false,
    visibleNodes: new Set(),
    edgeFractions: new Map(),
  };
}

/** Apply a suppression response unless a newer one was already applied:
 *  only the latest-issued slider query may mutate the visible set. */
export function applySuppression(
  s: ViewState,
  seq: number,
  resp: SuppressionResponse,
): ViewState {
  if (seq <= s.appliedSeq) return s;
  return {
    ...s,
    appliedSeq: seq,
    suppressionDistance: resp.d,
    suppressionActive: true,
    visibleNodes: new Set(resp.nodes),
    edgeFractions: new Map(resp.edges.map((e) => [e.id, e.fraction])),
  };
}

/** The highlighted path always joins the selected root and target. */
export function withPath(s: ViewState, target: number, path: PathResponse): ViewState {
  if (s.root === null) return s;
  if (path.found && (path.nodes[0] !== s.root || path.nodes[path.nodes.length - 1] !== target)) {
    return s; // response does not match the current selection; drop it
  }
  return { ...s, target, path };
}

export function withLabels(s: ViewState, labels: LabelsResponse): ViewState {
  return { ...s, labels, labelsVisible: true };
}

export function toggleLabelOverlay(s: ViewState): ViewState {
  return { ...s, labelsVisible: !s.labelsVisible };
}

/** Lines for the verdict side panel. */
export function labelPanelLines(labels: LabelsResponse | null): string[] {
  if (!labels) return [];
  const lines = labels.verdicts.map((v) => {
    const status = v.present ? "present" : `ABSENT (${v.reason})`;
    const slope = v.slope === null ? "" : ` slope=${v.slope.toFixed(2)}`;
    return `${v.vessel}: ${status}${slope}`;
  });
  lines.push(labels.lvo_positive ? `LVO POSITIVE: ${labels.implicated.join(", ")}` : "LVO negative");
  return lines;
}
