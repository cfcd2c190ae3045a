import type { GraphResponse } from "./types.js";

export interface Mesh {
  vertices: number[][];
  triangles: number[][];
}

/** Parse the service's indexed triangle text: `v z y x` then 1-based `f i j k`. */
export function parseMeshText(text: string): Mesh {
  const vertices: number[][] = [];
  const triangles: number[][] = [];
  for (const line of text.split("\n")) {
    if (line.startsWith("v ")) {
      const [, a, b, c] = line.split(/\s+/);
      vertices.push([Number(a), Number(b), Number(c)]);
    } else if (line.startsWith("f ")) {
      const [, a, b, c] = line.split(/\s+/);
      triangles.push([Number(a) - 1, Number(b) - 1, Number(c) - 1]);
    }
  }
  return { vertices, triangles };
}

export interface VertexAnchor {
  edge: number; // nearest skeleton edge
  frac: number; // arc fraction along that edge at the nearest point
}

export interface Scene {
  graph: GraphResponse;
  mesh: Mesh | null;
  /** per mesh vertex: which edge (and how far along it) the vertex hugs,
   *  so the surface dissolves together with the suppressed skeleton */
  anchors: VertexAnchor[] | null;
}

interface EdgeSample {
  edge: number;
  frac: number;
  p: number[];
}

function edgeSamples(graph: GraphResponse): EdgeSample[] {
  const out: EdgeSample[] = [];
  for (const e of graph.edges) {
    const pts = e.polyline;
    let arc = 0;
    const cum = [0];
    for (let i = 1; i < pts.length; i++) {
      arc += Math.hypot(
        pts[i][0] - pts[i - 1][0],
        pts[i][1] - pts[i - 1][1],
        pts[i][2] - pts[i - 1][2],
      );
      cum.push(arc);
    }
    for (let i = 0; i < pts.length; i++) {
      out.push({ edge: e.id, frac: arc > 0 ? cum[i] / arc : 0, p: pts[i] });
    }
  }
  return out;
}

function nearestAnchor(samples: EdgeSample[], v: number[]): VertexAnchor {
  let best = samples[0];
  let bestD = Infinity;
  for (const s of samples) {
    const d =
      (s.p[0] - v[0]) ** 2 + (s.p[1] - v[1]) ** 2 + (s.p[2] - v[2]) ** 2;
    if (d < bestD) {
      bestD = d;
      best = s;
    }
  }
  return { edge: best.edge, frac: best.frac };
}

export function buildScene(graph: GraphResponse, meshText: string | null): Scene {
  if (!meshText) {
    return { graph, mesh: null, anchors: null };
  }
  const mesh = parseMeshText(meshText);
  const samples = edgeSamples(graph);
  const anchors =
    samples.length > 0 ? mesh.vertices.map((v) => nearestAnchor(samples, v)) : null;
  return { graph, mesh, anchors };
}
