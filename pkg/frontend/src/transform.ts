// View transforms: top-down orthographic (primary) and a simple orbit
// projection for the three-hole scene. World units are metres; canvas pixels.

import type { Vec3 } from "./protocol.js";

export interface View2D {
  centerX: number; // world m at the canvas center
  centerY: number;
  scale: number; // px per m
  width: number;
  height: number;
}

export function worldToScreen(v: View2D, x: number, y: number): [number, number] {
  return [v.width / 2 + (x - v.centerX) * v.scale, v.height / 2 - (y - v.centerY) * v.scale];
}

export function screenToWorld(v: View2D, px: number, py: number): [number, number] {
  return [v.centerX + (px - v.width / 2) / v.scale, v.centerY - (py - v.height / 2) / v.scale];
}

/** Pointer drag in pixels -> world displacement (y axis flips). */
export function dragToWorldDelta(v: View2D, dxPx: number, dyPx: number): [number, number] {
  return [dxPx / v.scale, -dyPx / v.scale];
}

export interface Orbit {
  yaw: number; // rad about +z
  pitch: number; // rad toward the viewer
  scale: number;
  width: number;
  height: number;
  centerZ: number;
}

/** Orthographic orbit projection for the 3D view. */
export function projectOrbit(o: Orbit, p: Vec3): [number, number] {
  const cy = Math.cos(o.yaw);
  const sy = Math.sin(o.yaw);
  const cp = Math.cos(o.pitch);
  const sp = Math.sin(o.pitch);
  const x1 = cy * p[0] + sy * p[1];
  const y1 = -sy * p[0] + cy * p[1];
  const z1 = p[2] - o.centerZ;
  const u = x1;
  const w = cp * y1 + sp * z1;
  return [o.width / 2 + u * o.scale, o.height / 2 - w * o.scale];
}

export function fitView(
  width: number,
  height: number,
  points: [number, number][],
  marginFrac = 0.12,
): View2D {
  if (points.length === 0) {
    return { centerX: 0, centerY: 0, scale: 5000, width, height };
  }
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const [x, y] of points) {
    minX = Math.min(minX, x);
    maxX = Math.max(maxX, x);
    minY = Math.min(minY, y);
    maxY = Math.max(maxY, y);
  }
  const spanX = Math.max(maxX - minX, 1e-6);
  const spanY = Math.max(maxY - minY, 1e-6);
  const scale = Math.min(
    (width * (1 - 2 * marginFrac)) / spanX,
    (height * (1 - 2 * marginFrac)) / spanY,
  );
  return { centerX: (minX + maxX) / 2, centerY: (minY + maxY) / 2, scale, width, height };
}
