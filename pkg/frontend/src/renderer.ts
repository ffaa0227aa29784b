// Canvas renderer: stress-colored point cloud, gripper pads, goal marker.

import { OrbitCamera, Vec3 } from "./camera.js";
import { vmToColor } from "./colorscale.js";
import { StateFrame } from "./protocol.js";

const PAD_HALF: Vec3 = [0.005, 0.01, 0.02];

function quatRotate(q: number[], v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  // rotation matrix rows applied to v
  return [
    (1 - 2 * (y * y + z * z)) * v[0] + 2 * (x * y - w * z) * v[1] + 2 * (x * z + w * y) * v[2],
    2 * (x * y + w * z) * v[0] + (1 - 2 * (x * x + z * z)) * v[1] + 2 * (y * z - w * x) * v[2],
    2 * (x * z - w * y) * v[0] + 2 * (y * z + w * x) * v[1] + (1 - 2 * (x * x + y * y)) * v[2],
  ];
}

export function padCorners(ee: number[], width: number): Vec3[][] {
  const pos: Vec3 = [ee[0], ee[1], ee[2]];
  const quat = ee.slice(3, 7);
  const pads: Vec3[][] = [];
  for (const side of [-1, 1]) {
    const center: Vec3 = [side * (width / 2 + PAD_HALF[0]), 0, -PAD_HALF[2]];
    const corners: Vec3[] = [];
    for (const sx of [-1, 1]) {
      for (const sy of [-1, 1]) {
        for (const sz of [-1, 1]) {
          const local: Vec3 = [
            center[0] + sx * PAD_HALF[0],
            center[1] + sy * PAD_HALF[1],
            center[2] + sz * PAD_HALF[2],
          ];
          const r = quatRotate(quat, local);
          corners.push([pos[0] + r[0], pos[1] + r[1], pos[2] + r[2]]);
        }
      }
    }
    pads.push(corners);
  }
  return pads;
}

// edges of a box given its 8 corners in (sx, sy, sz) lexicographic order
const BOX_EDGES: [number, number][] = [
  [0, 1], [2, 3], [4, 5], [6, 7],
  [0, 2], [1, 3], [4, 6], [5, 7],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

export class Renderer {
  constructor(
    private ctx: CanvasRenderingContext2D,
    public camera: OrbitCamera,
    public vmMax: number,
  ) {}

  draw(frame: StateFrame): void {
    const { ctx } = this;
    const w = ctx.canvas.width;
    const h = ctx.canvas.height;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, w, h);

    // table grid
    ctx.strokeStyle = "#2a3138";
    ctx.lineWidth = 1;
    for (let i = 0; i <= 8; i++) {
      this.line([i * 0.02, 0, 0.015], [i * 0.02, 0.16, 0.015], w, h);
      this.line([0, i * 0.02, 0.015], [0.16, i * 0.02, 0.015], w, h);
    }

    // goal marker
    const goal = this.camera.project(frame.goal, w, h);
    if (goal) {
      ctx.strokeStyle = "#4caf50";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(goal.x, goal.y, 9, 0, Math.PI * 2);
      ctx.stroke();
    }

    // point cloud, far-to-near so near points overdraw
    const projected: { x: number; y: number; depth: number; vm: number }[] = [];
    for (let i = 0; i < frame.points.length; i++) {
      const p = this.camera.project(frame.points[i], w, h);
      if (p) projected.push({ ...p, vm: frame.vm[i] ?? 0 });
    }
    projected.sort((a, b) => b.depth - a.depth);
    for (const p of projected) {
      this.ctx.fillStyle = vmToColor(p.vm, this.vmMax);
      const r = Math.max(1.5, 5 - p.depth * 10);
      ctx.fillRect(p.x - r / 2, p.y - r / 2, r, r);
    }

    // gripper pads
    ctx.strokeStyle = "#d0d6dd";
    ctx.lineWidth = 1.5;
    for (const corners of padCorners(frame.ee, frame.width)) {
      for (const [a, b] of BOX_EDGES) {
        this.line(corners[a], corners[b], w, h);
      }
    }
  }

  private line(a: Vec3, b: Vec3, w: number, h: number): void {
    const pa = this.camera.project(a, w, h);
    const pb = this.camera.project(b, w, h);
    if (!pa || !pb) return;
    this.ctx.beginPath();
    this.ctx.moveTo(pa.x, pa.y);
    this.ctx.lineTo(pb.x, pb.y);
    this.ctx.stroke();
  }
}
