import type { Camera } from "./projection.js";
import { project } from "./projection.js";
import type { Scene } from "./scene.js";
import type { ViewState } from "./state.js";

/** The subset of CanvasRenderingContext2D the renderer uses; tests pass a
 *  recording stub, the browser passes the real context. */
export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

export interface RenderStats {
  nodesDrawn: number;
  edgesDrawn: number;
  partialEdges: number;
  trianglesDrawn: number;
  pathDrawn: boolean;
  markersDrawn: number;
}

function edgeFraction(state: ViewState, edgeId: number): number {
  if (!state.suppressionActive) return 1;
  return state.edgeFractions.get(edgeId) ?? 0;
}

function nodeVisible(state: ViewState, nodeId: number): boolean {
  return !state.suppressionActive || state.visibleNodes.has(nodeId);
}

/** Polyline prefix covering `frac` of the arc length, starting from the
 *  endpoint that is inside the visible region. */
export function clipPolyline(
  polyline: number[][],
  frac: number,
  fromEnd: boolean,
): number[][] {
  if (frac >= 1) return polyline;
  if (frac <= 0) return [];
  const pts = fromEnd ? [...polyline].reverse() : polyline;
  const steps: number[] = [];
  let total = 0;
  for (let i = 1; i < pts.length; i++) {
    const s = Math.hypot(
      pts[i][0] - pts[i - 1][0],
      pts[i][1] - pts[i - 1][1],
      pts[i][2] - pts[i - 1][2],
    );
    steps.push(s);
    total += s;
  }
  const budget = frac * total;
  const out = [pts[0]];
  let used = 0;
  for (let i = 0; i < steps.length; i++) {
    if (used + steps[i] <= budget) {
      out.push(pts[i + 1]);
      used += steps[i];
    } else {
      const t = steps[i] > 0 ? (budget - used) / steps[i] : 0;
      out.push([
        pts[i][0] + t * (pts[i + 1][0] - pts[i][0]),
        pts[i][1] + t * (pts[i + 1][1] - pts[i][1]),
        pts[i][2] + t * (pts[i + 1][2] - pts[i][2]),
      ]);
      break;
    }
  }
  return out;
}

function strokePolyline(
  ctx: Draw2D,
  pts: number[][],
  cam: Camera,
  w: number,
  h: number,
): void {
  ctx.beginPath();
  const p0 = project(pts[0], cam, w, h);
  ctx.moveTo(p0.x, p0.y);
  for (let i = 1; i < pts.length; i++) {
    const p = project(pts[i], cam, w, h);
    ctx.lineTo(p.x, p.y);
  }
  ctx.stroke();
}

export function renderScene(
  ctx: Draw2D,
  w: number,
  h: number,
  scene: Scene,
  state: ViewState,
  cam: Camera,
): RenderStats {
  const stats: RenderStats = {
    nodesDrawn: 0,
    edgesDrawn: 0,
    partialEdges: 0,
    trianglesDrawn: 0,
    pathDrawn: false,
    markersDrawn: 0,
  };
  ctx.clearRect(0, 0, w, h);
  const { graph, mesh, anchors } = scene;

  if (mesh && anchors) {
    const vertexVisible = anchors.map(
      (a) => edgeFraction(state, a.edge) >= a.frac - 1e-9,
    );
    const tris: { tri: number[]; depth: number; shade: number }[] = [];
    for (const t of mesh.triangles) {
      if (!(vertexVisible[t[0]] && vertexVisible[t[1]] && vertexVisible[t[2]])) continue;
      const pr = t.map((vi) => project(mesh.vertices[vi], cam, w, h));
      const depth = (pr[0].depth + pr[1].depth + pr[2].depth) / 3;
      // flat shade from the screen-space winding area
      const area =
        (pr[1].x - pr[0].x) * (pr[2].y - pr[0].y) -
        (pr[2].x - pr[0].x) * (pr[1].y - pr[0].y);
      const shade = Math.min(1, Math.abs(area) / 40 + 0.35);
      tris.push({ tri: t, depth, shade });
    }
    tris.sort((u, v) => u.depth - v.depth);
    ctx.globalAlpha = 0.85;
    for (const { tri, shade } of tris) {
      const pr = tri.map((vi) => project(mesh.vertices[vi], cam, w, h));
      const c = Math.round(140 + 90 * shade);
      ctx.fillStyle = `rgb(${c},${Math.round(c * 0.45)},${Math.round(c * 0.4)})`;
      ctx.beginPath();
      ctx.moveTo(pr[0].x, pr[0].y);
      ctx.lineTo(pr[1].x, pr[1].y);
      ctx.lineTo(pr[2].x, pr[2].y);
      ctx.closePath();
      ctx.fill();
      stats.trianglesDrawn++;
    }
    ctx.globalAlpha = 1;
  }

  // skeleton edges, clipped at the reported visible fraction
  for (const e of graph.edges) {
    const frac = edgeFraction(state, e.id);
    if (frac <= 0) continue;
    const aVis = nodeVisible(state, e.a);
    const bVis = nodeVisible(state, e.b);
    const pts =
      frac >= 1 ? e.polyline : clipPolyline(e.polyline, frac, !aVis && bVis);
    if (pts.length < 2) continue;
    ctx.strokeStyle = mesh ? "#d8e6f2" : "#88a6c4";
    ctx.lineWidth = Math.max(1, Math.min(4, e.mean_radius));
    strokePolyline(ctx, pts, cam, w, h);
    stats.edgesDrawn++;
    if (frac < 1) stats.partialEdges++;
  }

  // highlighted path on top
  if (state.path && state.path.found && state.path.edges.length > 0) {
    ctx.strokeStyle = "#2ecc40";
    ctx.lineWidth = 4;
    for (const eid of state.path.edges) {
      strokePolyline(ctx, graph.edges[eid].polyline, cam, w, h);
    }
    stats.pathDrawn = true;
  } else if (state.path && state.path.found) {
    stats.pathDrawn = true; // zero-length path (target == root)
  }

  // nodes
  for (const n of graph.nodes) {
    if (!nodeVisible(state, n.id)) continue;
    const p = project(n.pos, cam, w, h);
    if (n.id === state.root) {
      ctx.fillStyle = "#0074d9";
      ctx.beginPath();
      ctx.rect(p.x - 5, p.y - 5, 10, 10);
      ctx.fill();
    } else {
      ctx.fillStyle = n.id === state.target ? "#2ecc40" : "#ffdc00";
      ctx.beginPath();
      ctx.arc(p.x, p.y, n.id === state.target ? 5 : 3, 0, 2 * Math.PI);
      ctx.fill();
    }
    stats.nodesDrawn++;
  }

  // label markers at their final positions
  if (state.labelsVisible && state.labels) {
    ctx.font = "12px sans-serif";
    for (const v of state.labels.verdicts) {
      if (!v.final_marker_position) continue;
      const p = project(v.final_marker_position, cam, w, h);
      ctx.fillStyle = v.present ? "#ff4136" : "#666666";
      ctx.beginPath();
      ctx.arc(p.x, p.y, 4, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillText(v.vessel, p.x + 6, p.y - 4);
      stats.markersDrawn++;
    }
  }
  return stats;
}
