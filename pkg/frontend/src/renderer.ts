// Canvas rendering: scene outline, robot polyline with bead/head markers,
// cargo, magnet glyph with its moment-axis arrow, metrics panel text. Pure
// function of (scene, last frame, view state) - no client-side physics.

import type { FrameMessage, SceneMessage, Vec3 } from "./protocol.js";
import { projectOrbit, worldToScreen, type Orbit, type View2D } from "./transform.js";

export interface PendingPose {
  pos: Vec3;
  axis: Vec3;
}

export interface ViewState {
  view: View2D;
  orbit: Orbit | null; // non-null = 3D orbit mode (three-hole scene)
  pending: PendingPose | null; // optimistic magnet pose awaiting server echo
  connected: boolean;
  controlling: boolean;
}

type Ctx = CanvasRenderingContext2D;

function project(vs: ViewState, p: Vec3): [number, number] {
  if (vs.orbit) return projectOrbit(vs.orbit, p);
  return worldToScreen(vs.view, p[0], p[1]);
}

function drawPolyline(ctx: Ctx, pts: [number, number][], close = false): void {
  if (pts.length < 2) return;
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i][0], pts[i][1]);
  if (close) ctx.closePath();
  ctx.stroke();
}

export function renderFrame(
  ctx: Ctx,
  scene: SceneMessage | null,
  frame: FrameMessage | null,
  vs: ViewState,
): void {
  const { width, height } = vs.view;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);

  if (scene) {
    ctx.strokeStyle = "#3b4a5a";
    ctx.lineWidth = 1.2;
    for (const line of scene.sdf_mesh) {
      drawPolyline(
        ctx,
        line.map(([x, y]) => project(vs, [x, y, 0])),
      );
    }
  }
  if (!frame) return;

  // cargo
  ctx.strokeStyle = "#46a758";
  ctx.fillStyle = "rgba(70,167,88,0.25)";
  for (const c of frame.cargo) {
    const [cx, cy] = project(vs, c.pos);
    const r = 3.35e-3 * vs.view.scale;
    ctx.beginPath();
    ctx.arc(cx, cy, Math.max(r, 3), 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
  }

  // robot body
  const pts = frame.nodes.map((p) => project(vs, p));
  ctx.strokeStyle = "#e8e6e3";
  ctx.lineWidth = 1.6;
  drawPolyline(ctx, pts);

  // bead markers sized from the scene's per-node body radii
  if (scene) {
    ctx.fillStyle = "#d9822b";
    const rNominal = Math.min(...scene.body_radius);
    scene.body_radius.forEach((r, i) => {
      if (r > rNominal * 1.05 && i < pts.length - 1) {
        ctx.beginPath();
        ctx.arc(pts[i][0], pts[i][1], Math.max(r * vs.view.scale, 1.5), 0, 2 * Math.PI);
        ctx.fill();
      }
    });
  }
  // head marker
  const head = pts[pts.length - 1];
  ctx.fillStyle = "#e5484d";
  ctx.beginPath();
  ctx.arc(head[0], head[1], 4, 0, 2 * Math.PI);
  ctx.fill();

  // magnet glyph: server pose, plus the optimistic pending pose if different
  drawMagnet(ctx, vs, frame.magnet.pos, frame.magnet.axis, "#4f8cc9", 1.0);
  if (vs.pending) {
    drawMagnet(ctx, vs, vs.pending.pos, vs.pending.axis, "#86b9e8", 0.55);
  }

  // status badges
  ctx.fillStyle = "#aab4c0";
  ctx.font = "12px system-ui, sans-serif";
  const badges: string[] = [];
  if (frame.paused) badges.push("paused");
  if (frame.recording) badges.push("REC");
  if (!vs.controlling) badges.push("read-only");
  if (!vs.connected) badges.push("disconnected");
  badges.forEach((b, i) => ctx.fillText(b, 10, 18 + 16 * i));
}

function drawMagnet(ctx: Ctx, vs: ViewState, pos: Vec3, axis: Vec3, color: string, alpha: number): void {
  const [mx, my] = project(vs, pos);
  ctx.save();
  ctx.globalAlpha = alpha;
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 2;
  const r = Math.max(15e-3 * vs.view.scale * 0.35, 6);
  ctx.beginPath();
  ctx.arc(mx, my, r, 0, 2 * Math.PI);
  ctx.stroke();
  // moment-axis arrow (in-plane projection)
  const tip = project(vs, [pos[0] + axis[0] * 8e-3, pos[1] + axis[1] * 8e-3, pos[2]]);
  ctx.beginPath();
  ctx.moveTo(mx, my);
  ctx.lineTo(tip[0], tip[1]);
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(tip[0], tip[1], 3, 0, 2 * Math.PI);
  ctx.fill();
  ctx.restore();
}

export function metricsText(frame: FrameMessage): string[] {
  const m = frame.metrics;
  return [
    `t = ${frame.t.toFixed(3)} s`,
    `kappa_max = ${(m.kappa_max / 1000).toFixed(3)} /mm`,
    `head speed = ${(m.head_speed * 1000).toFixed(2)} mm/s`,
    `|B| at head = ${(m.B_at_head * 1000).toFixed(2)} mT`,
    `rt factor = ${m.rt_factor.toFixed(2)}x`,
  ];
}
