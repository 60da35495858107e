/** Live play over the session websocket: arrow keys / WASD move, space is
 * the use action, period waits. Each accepted keypress sends exactly one
 * action; the canvas updates when the server replies with the next frame. */

import type { FrameView } from "./api.js";

export const KEYMAP: Record<string, string> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
  w: "up",
  s: "down",
  a: "left",
  d: "right",
  W: "up",
  S: "down",
  A: "left",
  D: "right",
  " ": "action",
  ".": "wait",
};

export function keyToAction(key: string): string | null {
  return KEYMAP[key] ?? null;
}

/** The subset of the WebSocket interface the client uses; tests and node
 * integration inject `ws` instances, the browser passes a native socket. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "message", handler: (ev: { data: unknown }) => void): void;
  addEventListener(type: "close", handler: () => void): void;
  addEventListener(type: "open", handler: () => void): void;
}

export interface LivePlayHooks {
  onFrame(frame: FrameView): void;
  /** Called with the terminal status when an episode ends; the reset frame
   * has already been delivered via onFrame. */
  onOutcome(status: string): void;
  onError(message: string): void;
  onDisconnect(): void;
}

export class LivePlay {
  constructor(
    private readonly socket: SocketLike,
    private readonly hooks: LivePlayHooks,
  ) {
    socket.addEventListener("message", (ev) => this.handleMessage(String(ev.data)));
    socket.addEventListener("close", () => hooks.onDisconnect());
  }

  private handleMessage(data: string): void {
    let msg: { frame?: FrameView; error?: string };
    try {
      msg = JSON.parse(data);
    } catch {
      this.hooks.onError("unreadable server message");
      return;
    }
    if (msg.error !== undefined) {
      this.hooks.onError(msg.error);
      return;
    }
    if (msg.frame !== undefined) {
      this.hooks.onFrame(msg.frame);
      if (msg.frame.status !== "ongoing") {
        this.hooks.onOutcome(msg.frame.status);
      }
    }
  }

  /** Route one keypress; returns the action sent, or null if the key is not
   * bound (so callers can let unbound keys bubble). */
  handleKey(key: string): string | null {
    const action = keyToAction(key);
    if (action !== null) {
      this.socket.send(JSON.stringify({ action }));
    }
    return action;
  }

  close(): void {
    this.socket.close();
  }
}
