/**
 * Live cockpit session: connects a transport to the store and input loop,
 * maintains the 1 s heartbeat, and flips to a prominent "paused" state when
 * the socket drops (mirroring the bridge's watchdog pause).
 */
import {
  ControlMessage,
  FrameReader,
  HEARTBEAT_INTERVAL_MS,
  encodeMessage,
} from "./protocol.js";
import { InputLoop } from "./input.js";
import { Store } from "./store.js";

/** Minimal socket surface so tests can substitute a mock bridge. */
export interface Transport {
  send(data: Uint8Array): void;
  onMessage(fn: (data: Uint8Array) => void): void;
  onClose(fn: () => void): void;
  close(): void;
}

export class CockpitClient {
  readonly store = new Store();
  readonly input: InputLoop;
  private reader = new FrameReader();
  private heartbeatTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly transport: Transport,
    private readonly now: () => number = () => Date.now() / 1000,
    options: { controlsEnabled?: boolean } = {},
  ) {
    if (options.controlsEnabled === false) this.store.setControlsEnabled(false);
    this.input = new InputLoop(this.store, (msg) => this.sendControl(msg), now);
    transport.onMessage((data) => this.handleBytes(data));
    transport.onClose(() => this.store.setStatus("paused"));
  }

  start(): void {
    this.heartbeatTimer = setInterval(
      () => this.sendControl({ kind: "heartbeat", ts: this.now() }),
      HEARTBEAT_INTERVAL_MS,
    );
  }

  stop(): void {
    if (this.heartbeatTimer !== null) clearInterval(this.heartbeatTimer);
    this.heartbeatTimer = null;
    this.transport.close();
  }

  private sendControl(msg: ControlMessage): void {
    this.transport.send(encodeMessage(msg));
  }

  private handleBytes(data: Uint8Array): void {
    for (const frame of this.reader.push(data)) {
      this.store.ingestFrame(frame);
      this.input.onFrame();
    }
  }
}

/** Browser WebSocket adapter for the Transport interface. */
export function webSocketTransport(url: string): Transport {
  const ws = new WebSocket(url);
  ws.binaryType = "arraybuffer";
  return {
    send: (data) => ws.send(data),
    onMessage: (fn) =>
      ws.addEventListener("message", (ev) => {
        if (ev.data instanceof ArrayBuffer) fn(new Uint8Array(ev.data));
      }),
    onClose: (fn) => ws.addEventListener("close", fn),
    close: () => ws.close(),
  };
}
