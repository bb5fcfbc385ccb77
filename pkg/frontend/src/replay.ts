/**
 * Replay viewer: consumes a streamed frame log, keeps the full timeline for
 * scrubbing, and renders through the same store/scene path as the live
 * cockpit — with controls disabled.
 */
import { FrameMessage } from "./protocol.js";
import { Store } from "./store.js";

export class ReplaySession {
  readonly store = new Store();
  readonly frames: FrameMessage[] = [];
  private cursor = -1;
  private ended = false;

  constructor() {
    this.store.setControlsEnabled(false);
  }

  /** Append a streamed frame; the view follows the newest frame until the
   * user scrubs. */
  append(frame: FrameMessage): void {
    this.frames.push(frame);
    if (this.cursor === this.frames.length - 2 || this.cursor === -1) {
      this.seek(this.frames.length - 1);
    }
  }

  end(): void {
    this.ended = true;
    this.store.setStatus("ended");
  }

  get isEnded(): boolean {
    return this.ended;
  }

  get index(): number {
    return this.cursor;
  }

  seek(index: number): void {
    if (index < 0 || index >= this.frames.length) return;
    this.cursor = index;
    const frame = this.frames[index];
    if (frame) this.store.ingestFrame(frame);
  }

  /** Jump to the first frame where the human was in control. */
  seekToTakeover(): boolean {
    const idx = this.frames.findIndex((f) => f.flags.takeover);
    if (idx < 0) return false;
    this.seek(idx);
    return true;
  }

  stepForward(): void {
    this.seek(this.cursor + 1);
  }

  stepBack(): void {
    this.seek(this.cursor - 1);
  }
}
