// Lock-step driving: exactly one action message per received state frame.
//
// Free-running keyboard polling would flood the bridge and desynchronize the
// recorded demo from the control rate; instead the current key set is
// sampled once whenever a frame arrives, and nothing is sent in between.

import { keysToAction } from "./keymap.js";
import { ActionMsg, StateFrame } from "./protocol.js";

export interface ActionSink {
  send(msg: ActionMsg): void;
}

export class LockstepDriver {
  private pressed = new Set<string>();
  private lastStep = -1;
  sentCount = 0;
  enabled = true; // false for view-only clients

  keyDown(key: string): void {
    this.pressed.add(key.toLowerCase());
  }

  keyUp(key: string): void {
    this.pressed.delete(key.toLowerCase());
  }

  clearKeys(): void {
    this.pressed.clear();
  }

  get heldKeys(): string[] {
    return [...this.pressed].sort();
  }

  /** Called once per incoming state frame; emits at most one action. */
  onFrame(frame: StateFrame, sink: ActionSink): ActionMsg | null {
    if (!this.enabled || frame.done) return null;
    if (frame.step === this.lastStep) return null; // duplicate frame guard
    this.lastStep = frame.step;
    const msg = keysToAction(this.pressed);
    sink.send(msg);
    this.sentCount += 1;
    return msg;
  }

  resetEpisode(): void {
    this.lastStep = -1;
  }
}
