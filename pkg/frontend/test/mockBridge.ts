/**
 * In-process stand-in for the simulator bridge, speaking the real wire
 * format. It steps a trivial world at a fixed cadence, applies the same
 * switch semantics as the simulator (human action used while the takeover
 * latch is on and a control has arrived), and records the transitions it
 * would push to the replay buffer.
 */
import { Transport } from "../src/client.js";
import { ControlMessage, FrameMessage, SCHEMA_VERSION, encodeMessage } from "../src/protocol.js";

export interface BridgeTransition {
  step: number;
  indicator: number;
  action: [number, number];
}

export function makeFrame(overrides: Partial<FrameMessage> = {}): FrameMessage {
  return {
    schema_version: SCHEMA_VERSION,
    t: 0,
    av: { x: 0, y: 1.75, heading: 0, v: 5, acc: 0 },
    followers: [{ loc: -15, v: 5, acc: 0 }],
    obstacles: [{ x: 60, y: 1.75, radius: 1 }],
    flags: { takeover: false, disturbance: false },
    hud: {
      velocity: 5,
      total_takeover_cost: 0,
      total_d_cost: 0,
      episode: 1,
      success_rate: 0,
    },
    ...overrides,
  };
}

export class MockBridge {
  readonly transitions: BridgeTransition[] = [];
  readonly received: ControlMessage[] = [];
  bufferSize = 0;
  private takeover = false;
  private humanAction: [number, number] | null = null;
  private step = 0;
  private connected = true;
  private messageHandler: ((data: Uint8Array) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  /** Client-facing transport endpoint wired straight into this bridge. */
  transport(): Transport {
    return {
      send: (data) => this.handleControlBytes(data),
      onMessage: (fn) => {
        this.messageHandler = fn;
      },
      onClose: (fn) => {
        this.closeHandler = fn;
      },
      close: () => this.disconnect(),
    };
  }

  disconnect(): void {
    if (!this.connected) return;
    this.connected = false;
    this.closeHandler?.();
  }

  private handleControlBytes(data: Uint8Array): void {
    if (!this.connected) return;
    const n = new DataView(data.buffer, data.byteOffset).getUint32(0, false);
    const msg = JSON.parse(
      new TextDecoder().decode(data.subarray(4, 4 + n)),
    ) as ControlMessage;
    this.received.push(msg);
    if (msg.kind === "takeover_start") {
      this.takeover = true;
      this.humanAction = null;
    } else if (msg.kind === "takeover_end") {
      this.takeover = false;
      this.humanAction = null;
    } else if (msg.kind === "control" && this.takeover) {
      this.humanAction = [msg.steer ?? 0, msg.throttle ?? 0];
    }
  }

  /** One simulation step: collect a transition (unless paused waiting for
   * the first takeover control) and broadcast a frame. */
  tick(): void {
    if (!this.connected) return;
    this.step += 1;
    if (this.takeover && this.humanAction === null) {
      // Takeover latched but no control yet: the collector pauses.
    } else {
      const action: [number, number] = this.takeover
        ? [this.humanAction![0], this.humanAction![1]]
        : [0, 0.3];
      this.transitions.push({
        step: this.step,
        indicator: this.takeover ? 1 : 0,
        action,
      });
      this.bufferSize = this.transitions.length;
    }
    const frame = makeFrame({
      t: this.step,
      flags: { takeover: this.takeover, disturbance: false },
    });
    this.messageHandler?.(encodeMessage(frame));
  }
}
