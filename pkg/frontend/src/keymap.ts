// Keyboard bindings. Every held key contributes its axis at the per-step
// limit; combinations compose additively and clamp to [-1, 1] per component.
//
//   W/S  +-x      A/D  +-y      R/F  +-z
//   Q/E  yaw      arrows pitch/roll
//   Z    close    X    open

import { ActionMsg, zeroAction } from "./protocol.js";

export interface Binding {
  axis: "dx" | "dtheta" | "dg";
  index: number;
  sign: 1 | -1;
}

export const KEY_BINDINGS: Record<string, Binding> = {
  w: { axis: "dx", index: 0, sign: 1 },
  s: { axis: "dx", index: 0, sign: -1 },
  a: { axis: "dx", index: 1, sign: 1 },
  d: { axis: "dx", index: 1, sign: -1 },
  r: { axis: "dx", index: 2, sign: 1 },
  f: { axis: "dx", index: 2, sign: -1 },
  q: { axis: "dtheta", index: 2, sign: 1 },
  e: { axis: "dtheta", index: 2, sign: -1 },
  arrowup: { axis: "dtheta", index: 1, sign: 1 },
  arrowdown: { axis: "dtheta", index: 1, sign: -1 },
  arrowleft: { axis: "dtheta", index: 0, sign: 1 },
  arrowright: { axis: "dtheta", index: 0, sign: -1 },
  z: { axis: "dg", index: 0, sign: -1 },
  x: { axis: "dg", index: 0, sign: 1 },
};

const clamp = (v: number) => Math.max(-1, Math.min(1, v));

export function keysToAction(pressed: Iterable<string>): ActionMsg {
  const msg = zeroAction();
  for (const key of pressed) {
    const binding = KEY_BINDINGS[key.toLowerCase()];
    if (!binding) continue;
    if (binding.axis === "dg") {
      msg.dg = clamp(msg.dg + binding.sign);
    } else {
      msg[binding.axis][binding.index] = clamp(
        msg[binding.axis][binding.index] + binding.sign,
      );
    }
  }
  return msg;
}

export function isActionKey(key: string): boolean {
  return key.toLowerCase() in KEY_BINDINGS;
}
