/**
 * Single state store: socket reads and input events both funnel through
 * here, so the page has one source of truth. The store is a pure view of
 * the bridge — it never computes costs or flags itself.
 */
import { FrameMessage, HudFields, SCHEMA_VERSION } from "./protocol.js";

export type SessionStatus = "connecting" | "live" | "paused" | "ended";

export interface CameraTransform {
  /** World metres of the AV centre; the viewport tracks this point. */
  cx: number;
  cy: number;
  /** Pixels per metre. */
  scale: number;
}

export interface SceneModel {
  frame: FrameMessage | null;
  camera: CameraTransform;
  /** Unknown schema_version: render read-only with a banner, never crash. */
  schemaMismatch: boolean;
  status: SessionStatus;
  /** Replay sessions render frames but must not send controls. */
  controlsEnabled: boolean;
}

export interface InputState {
  latched: boolean;
  steer: number;
  throttle: number;
}

export class Store {
  readonly scene: SceneModel = {
    frame: null,
    camera: { cx: 0, cy: 0, scale: 6 },
    schemaMismatch: false,
    status: "connecting",
    controlsEnabled: true,
  };
  readonly input: InputState = { latched: false, steer: 0, throttle: 0 };
  private listeners: Array<() => void> = [];

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  ingestFrame(frame: FrameMessage): void {
    if (frame.schema_version !== SCHEMA_VERSION) {
      this.scene.schemaMismatch = true;
      this.scene.controlsEnabled = false;
    }
    this.scene.frame = frame;
    this.scene.camera.cx = frame.av.x;
    this.scene.camera.cy = frame.av.y;
    if (this.scene.status === "connecting") this.scene.status = "live";
    this.notify();
  }

  setStatus(status: SessionStatus): void {
    this.scene.status = status;
    this.notify();
  }

  setControlsEnabled(enabled: boolean): void {
    this.scene.controlsEnabled = enabled;
    this.notify();
  }

  hud(): HudFields {
    return this.scene.frame?.hud ?? {};
  }
}
