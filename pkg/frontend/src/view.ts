// Session state shown to the operator. The displayed step index never
// decreases within an episode; stale or out-of-order frames are dropped.

import { StateFrame } from "./protocol.js";

export const DEMO_TARGET_COUNT = 20;

export class SessionView {
  latest: StateFrame | null = null;
  connection: "connecting" | "open" | "closed" = "connecting";
  role: "driver" | "viewer" | "unknown" = "unknown";
  savedDemos = 0;
  lastError: string | null = null;
  lastSavedPath: string | null = null;

  /** Accepts a frame only if it does not rewind the episode. */
  acceptFrame(frame: StateFrame): boolean {
    if (this.latest !== null
        && frame.seed === this.latest.seed
        && frame.step < this.latest.step) {
      return false;
    }
    this.latest = frame;
    return true;
  }

  demoProgress(): string {
    return `${this.savedDemos}/${DEMO_TARGET_COUNT} demos`;
  }

  statusLine(): string {
    const parts = [`${this.connection}`, this.role];
    if (this.latest) {
      parts.push(`step ${this.latest.step}`);
      if (this.latest.recording) {
        parts.push(`REC ${this.latest.recorded_steps}`);
      }
      if (this.latest.done) parts.push("episode over");
    }
    parts.push(this.demoProgress());
    return parts.join(" | ");
  }
}
