// Orthographic projection of mm-space points ([z, y, x], z pointing up the
// head) onto the canvas, with a yaw/pitch orbit camera.

export interface Camera {
  yaw: number; // radians around the vertical axis
  pitch: number; // radians tilting toward the viewer
  zoom: number; // px per mm
  center: [number, number, number]; // mm, rotation pivot
}

export interface Projected {
  x: number;
  y: number;
  depth: number; // larger = closer to the viewer
}

export function project(
  p: ArrayLike<number>,
  cam: Camera,
  width: number,
  height: number,
): Projected {
  const dz = p[0] - cam.center[0];
  const dy = p[1] - cam.center[1];
  const dx = p[2] - cam.center[2];
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  // yaw spins x/y (the axial plane), pitch tilts z toward the screen
  const rx = dx * cy + dy * sy;
  const ry = -dx * sy + dy * cy;
  const rz = dz * cp - ry * sp;
  const depth = ry * cp + dz * sp;
  return {
    x: width / 2 + rx * cam.zoom,
    y: height / 2 - rz * cam.zoom,
    depth,
  };
}

/** Nearest node (by screen distance) within pickRadius px, or null. Graph
 *  nodes, not mesh triangles, are the interaction targets. */
export function pickNode(
  positions: ArrayLike<number>[],
  ids: number[],
  cam: Camera,
  width: number,
  height: number,
  sx: number,
  sy: number,
  pickRadius = 12,
): number | null {
  let best: number | null = null;
  let bestD2 = pickRadius * pickRadius;
  for (let i = 0; i < positions.length; i++) {
    const pr = project(positions[i], cam, width, height);
    const d2 = (pr.x - sx) ** 2 + (pr.y - sy) ** 2;
    if (d2 <= bestD2) {
      bestD2 = d2;
      best = ids[i];
    }
  }
  return best;
}

export function fitCamera(points: ArrayLike<number>[], width: number, height: number): Camera {
  if (points.length === 0) {
    return { yaw: 0, pitch: 0, zoom: 1, center: [0, 0, 0] };
  }
  const lo = [Infinity, Infinity, Infinity];
  const hi = [-Infinity, -Infinity, -Infinity];
  for (const p of points) {
    for (let a = 0; a < 3; a++) {
      lo[a] = Math.min(lo[a], p[a]);
      hi[a] = Math.max(hi[a], p[a]);
    }
  }
  const center: [number, number, number] = [
    (lo[0] + hi[0]) / 2,
    (lo[1] + hi[1]) / 2,
    (lo[2] + hi[2]) / 2,
  ];
  const extent = Math.max(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1);
  return { yaw: 0.5, pitch: 0.4, zoom: (0.85 * Math.min(width, height)) / extent, center };
}
