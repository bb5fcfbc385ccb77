/**
 * Keyboard (and optional gamepad) input: space toggles the takeover latch,
 * arrow keys steer, W/S accelerate/brake. Control messages are emitted only
 * while latched, at most once per received frame.
 */
import { ControlMessage } from "./protocol.js";
import { Store } from "./store.js";

export const KEY_LATCH = " ";
export const KEY_LEFT = "ArrowLeft";
export const KEY_RIGHT = "ArrowRight";
export const KEY_ACCEL = "w";
export const KEY_BRAKE = "s";

const clamp = (v: number) => Math.max(-1, Math.min(1, v));

export class InputLoop {
  private held = new Set<string>();
  private controlPendingFrames = 0;

  constructor(
    private readonly store: Store,
    private readonly send: (msg: ControlMessage) => void,
    private readonly now: () => number = () => Date.now() / 1000,
  ) {}

  /** Key-down handler; returns the message it sent, if any. */
  keyDown(key: string): ControlMessage | null {
    if (!this.store.scene.controlsEnabled) return null;
    const k = key.length === 1 ? key.toLowerCase() : key;
    if (k === KEY_LATCH) {
      return this.toggleLatch();
    }
    this.held.add(k);
    this.refreshAxes();
    return null;
  }

  keyUp(key: string): void {
    const k = key.length === 1 ? key.toLowerCase() : key;
    this.held.delete(k);
    this.refreshAxes();
  }

  /** Gamepad axes already in [-1, 1]; still clamped defensively. */
  setAxes(steer: number, throttle: number): void {
    this.store.input.steer = clamp(steer);
    this.store.input.throttle = clamp(throttle);
  }

  private toggleLatch(): ControlMessage {
    const input = this.store.input;
    input.latched = !input.latched;
    const msg: ControlMessage = {
      kind: input.latched ? "takeover_start" : "takeover_end",
      ts: this.now(),
    };
    this.send(msg);
    return msg;
  }

  private refreshAxes(): void {
    let steer = 0;
    if (this.held.has(KEY_LEFT)) steer += 1;
    if (this.held.has(KEY_RIGHT)) steer -= 1;
    let throttle = 0;
    if (this.held.has(KEY_ACCEL)) throttle += 1;
    if (this.held.has(KEY_BRAKE)) throttle -= 1;
    this.setAxes(steer, throttle);
  }

  /**
   * Called once per received frame: while latched, send the current axes.
   * Tying emission to frame arrival caps the control rate at frame cadence.
   */
  onFrame(): ControlMessage | null {
    const input = this.store.input;
    if (!input.latched || !this.store.scene.controlsEnabled) return null;
    const msg: ControlMessage = {
      kind: "control",
      steer: clamp(input.steer),
      throttle: clamp(input.throttle),
      ts: this.now(),
    };
    this.send(msg);
    return msg;
  }
}
