// WebSocket glue: parse frames, keep the SessionView, run the lock-step loop.

import { LockstepDriver } from "./lockstep.js";
import { ClientMsg, parseServerMsg, ServerMsg } from "./protocol.js";
import { SessionView } from "./view.js";

export interface ClientHooks {
  onFrame?(view: SessionView): void;
  onMessage?(msg: ServerMsg): void;
}

export class TeleopClient {
  view = new SessionView();
  driver = new LockstepDriver();

  private ws: WebSocket;

  constructor(url: string, private hooks: ClientHooks = {}) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      this.view.connection = "open";
    };
    this.ws.onclose = () => {
      this.view.connection = "closed";
    };
    this.ws.onmessage = (ev: MessageEvent) => this.handle(String(ev.data));
  }

  handle(raw: string): void {
    const msg = parseServerMsg(raw);
    if (!msg) return;
    this.hooks.onMessage?.(msg);
    switch (msg.type) {
      case "hello":
        this.view.role = msg.role;
        this.driver.enabled = msg.role === "driver";
        break;
      case "state":
        if (this.view.acceptFrame(msg)) {
          this.driver.onFrame(msg, { send: (m) => this.send(m) });
          this.hooks.onFrame?.(this.view);
        }
        break;
      case "saved":
        this.view.savedDemos += 1;
        this.view.lastSavedPath = msg.path;
        break;
      case "error":
        this.view.lastError = msg.message;
        break;
    }
  }

  send(msg: ClientMsg): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  reset(seed?: number): void {
    this.driver.resetEpisode();
    this.send({ type: "control", cmd: "reset", arg: seed });
  }

  recordStart(seed?: number): void {
    this.driver.resetEpisode();
    this.send({ type: "control", cmd: "record_start", arg: seed });
  }

  recordStop(): void {
    this.send({ type: "control", cmd: "record_stop" });
  }

  save(): void {
    this.send({ type: "control", cmd: "save" });
  }
}
