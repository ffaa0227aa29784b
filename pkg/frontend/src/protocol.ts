// Wire types for the teleop bridge. This file mirrors the server's JSON
// schema exactly; the client speaks nothing else.

export interface StressDict {
  mean: number;
  median: number;
  top10_median: number;
  top5_mean: number;
  max: number;
}

export interface StateFrame {
  type: "state";
  step: number;
  points: [number, number, number][];
  vm: number[];
  ee: number[]; // position (3) + wxyz quaternion (4)
  width: number;
  reward: number;
  stress: StressDict;
  phase: string;
  done: boolean;
  recording: boolean;
  recorded_steps: number;
  goal: [number, number, number];
  seed: number;
}

export interface HelloMsg {
  type: "hello";
  role: "driver" | "viewer";
}

export interface SavedMsg {
  type: "saved";
  path: string;
  steps: number;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = StateFrame | HelloMsg | SavedMsg | ErrorMsg;

export interface ActionMsg {
  type: "action";
  dx: [number, number, number];
  dtheta: [number, number, number];
  dg: number;
}

export interface ControlMsg {
  type: "control";
  cmd: "reset" | "record_start" | "record_stop" | "save";
  arg?: number;
}

export type ClientMsg = ActionMsg | ControlMsg;

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const t = (data as { type?: unknown }).type;
  if (t === "state" || t === "hello" || t === "saved" || t === "error") {
    return data as ServerMsg;
  }
  return null;
}

export function zeroAction(): ActionMsg {
  return { type: "action", dx: [0, 0, 0], dtheta: [0, 0, 0], dg: 0 };
}
