// Orbit camera and perspective projection for the canvas renderer.

export interface OrbitParams {
  target: [number, number, number];
  distance: number;
  yaw: number; // rad, about world z
  pitch: number; // rad, above the horizon
}

export type Vec3 = [number, number, number];

export class OrbitCamera {
  params: OrbitParams;

  constructor(params?: Partial<OrbitParams>) {
    this.params = {
      target: [0.0775, 0.0775, 0.05],
      distance: 0.35,
      yaw: Math.PI * 0.75,
      pitch: Math.PI * 0.2,
      ...params,
    };
  }

  orbit(dYaw: number, dPitch: number): void {
    this.params.yaw += dYaw;
    const lim = Math.PI / 2 - 0.05;
    this.params.pitch = Math.max(-lim, Math.min(lim, this.params.pitch + dPitch));
  }

  zoom(factor: number): void {
    this.params.distance = Math.max(0.05, Math.min(2.0, this.params.distance * factor));
  }

  position(): Vec3 {
    const { target, distance, yaw, pitch } = this.params;
    return [
      target[0] + distance * Math.cos(pitch) * Math.cos(yaw),
      target[1] + distance * Math.cos(pitch) * Math.sin(yaw),
      target[2] + distance * Math.sin(pitch),
    ];
  }

  /** Basis vectors: forward toward the target, right, up. */
  basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const pos = this.position();
    const t = this.params.target;
    const f: Vec3 = [t[0] - pos[0], t[1] - pos[1], t[2] - pos[2]];
    const fn = Math.hypot(...f);
    const forward: Vec3 = [f[0] / fn, f[1] / fn, f[2] / fn];
    const right: Vec3 = [forward[1], -forward[0], 0];
    const rn = Math.hypot(...right) || 1;
    right[0] /= rn;
    right[1] /= rn;
    const up: Vec3 = [
      right[1] * forward[2] - right[2] * forward[1],
      right[2] * forward[0] - right[0] * forward[2],
      right[0] * forward[1] - right[1] * forward[0],
    ];
    return { forward, right, up };
  }

  /**
   * Project a world point to canvas pixels; returns null behind the camera.
   * `focal` is in pixels (width-relative pinhole).
   */
  project(p: Vec3, width: number, height: number, focal?: number):
      { x: number; y: number; depth: number } | null {
    const pos = this.position();
    const { forward, right, up } = this.basis();
    const d: Vec3 = [p[0] - pos[0], p[1] - pos[1], p[2] - pos[2]];
    const z = d[0] * forward[0] + d[1] * forward[1] + d[2] * forward[2];
    if (z <= 1e-6) return null;
    const x = d[0] * right[0] + d[1] * right[1] + d[2] * right[2];
    const y = d[0] * up[0] + d[1] * up[1] + d[2] * up[2];
    const f = focal ?? width * 1.2;
    return {
      x: width / 2 + (f * x) / z,
      y: height / 2 - (f * y) / z,
      depth: z,
    };
  }
}
