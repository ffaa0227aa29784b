import { describe, expect, it } from "vitest";

import { OrbitCamera } from "../src/camera.js";
import { DEFAULT_VM_MAX_PA, vmToColor } from "../src/colorscale.js";
import { parseServerMsg, zeroAction } from "../src/protocol.js";
import { SessionView } from "../src/view.js";
import { StateFrame, StressDict } from "../src/protocol.js";

const stress: StressDict = { mean: 1, median: 1, top10_median: 2, top5_mean: 2, max: 3 };

function frame(step: number, seed = 1): StateFrame {
  return {
    type: "state", step, points: [[0.08, 0.08, 0.04]], vm: [500],
    ee: [0.08, 0.08, 0.1, 1, 0, 0, 0], width: 0.06, reward: 0.5, stress,
    phase: "soft", done: false, recording: true, recorded_steps: step,
    goal: [0.08, 0.08, 0.13], seed,
  };
}

describe("SessionView", () => {
  it("never lets the displayed step go backwards within an episode", () => {
    const view = new SessionView();
    expect(view.acceptFrame(frame(4))).toBe(true);
    expect(view.acceptFrame(frame(2))).toBe(false);
    expect(view.latest!.step).toBe(4);
    // a new episode (different seed) may restart the counter
    expect(view.acceptFrame(frame(0, 2))).toBe(true);
  });

  it("reports recording progress in the status line", () => {
    const view = new SessionView();
    view.role = "driver";
    view.connection = "open";
    view.acceptFrame(frame(7));
    expect(view.statusLine()).toContain("REC 7");
    expect(view.statusLine()).toContain("0/20 demos");
  });
});

describe("vmToColor", () => {
  it("is deterministic", () => {
    for (const v of [0, 123.4, 2500, 7999, 12000]) {
      expect(vmToColor(v)).toBe(vmToColor(v));
    }
  });

  it("clamps at the fixed scale ends", () => {
    expect(vmToColor(-5)).toBe(vmToColor(0));
    expect(vmToColor(DEFAULT_VM_MAX_PA * 3)).toBe(vmToColor(DEFAULT_VM_MAX_PA));
  });

  it("moves from cool to warm as stress grows", () => {
    const parse = (c: string) => c.match(/\d+/g)!.map(Number);
    const cold = parse(vmToColor(0));
    const hot = parse(vmToColor(DEFAULT_VM_MAX_PA));
    expect(cold[2]).toBeGreaterThan(cold[0]); // blue-dominant
    expect(hot[0]).toBeGreaterThan(hot[2]); // red-dominant
  });
});

describe("protocol", () => {
  it("round-trips a state frame", () => {
    const f = frame(3);
    const parsed = parseServerMsg(JSON.stringify(f));
    expect(parsed).toEqual(f);
  });

  it("rejects malformed payloads", () => {
    expect(parseServerMsg("not json")).toBeNull();
    expect(parseServerMsg('{"type":"unknown"}')).toBeNull();
    expect(parseServerMsg('42')).toBeNull();
  });

  it("zero action has seven zero components", () => {
    const a = zeroAction();
    expect([...a.dx, ...a.dtheta, a.dg]).toEqual([0, 0, 0, 0, 0, 0, 0]);
  });
});

describe("OrbitCamera", () => {
  it("projects the look-at target to the canvas center", () => {
    const cam = new OrbitCamera({ target: [0.08, 0.08, 0.05] });
    const p = cam.project([0.08, 0.08, 0.05], 800, 600)!;
    expect(p.x).toBeCloseTo(400, 5);
    expect(p.y).toBeCloseTo(300, 5);
  });

  it("returns null for points behind the camera", () => {
    const cam = new OrbitCamera({ target: [0, 0, 0], distance: 0.3, yaw: 0, pitch: 0 });
    const behind = cam.position();
    expect(cam.project([behind[0] + 1, behind[1], behind[2]], 800, 600)).toBeNull();
  });

  it("keeps pitch within limits while orbiting", () => {
    const cam = new OrbitCamera();
    cam.orbit(0, 10);
    expect(cam.params.pitch).toBeLessThan(Math.PI / 2);
    cam.orbit(0, -20);
    expect(cam.params.pitch).toBeGreaterThan(-Math.PI / 2);
  });
});
