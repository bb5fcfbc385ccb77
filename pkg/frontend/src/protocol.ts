/**
 * Wire protocol shared with the simulator bridge: length-prefixed (4-byte
 * big-endian) UTF-8 JSON messages. The client decodes FrameMessages and
 * encodes ControlMessages; it never recomputes any value found in a frame.
 */
import { z } from "zod";

export const SCHEMA_VERSION = 1;
export const HEARTBEAT_INTERVAL_MS = 1000;

export const VehicleSchema = z.object({
  x: z.number(),
  y: z.number(),
  heading: z.number(),
  v: z.number(),
  acc: z.number(),
});

export const FollowerSchema = z.object({
  loc: z.number(),
  v: z.number(),
  acc: z.number(),
});

export const ObstacleSchema = z.object({
  x: z.number(),
  y: z.number(),
  radius: z.number(),
});

export const FlagsSchema = z.object({
  takeover: z.boolean(),
  disturbance: z.boolean(),
});

export const HudSchema = z.object({
  velocity: z.number().optional(),
  total_takeover_cost: z.number().optional(),
  total_d_cost: z.number().optional(),
  episode: z.number().optional(),
  success_rate: z.number().optional(),
});

export const FrameSchema = z.object({
  schema_version: z.number(),
  t: z.number(),
  av: VehicleSchema,
  followers: z.array(FollowerSchema),
  obstacles: z.array(ObstacleSchema),
  flags: FlagsSchema,
  hud: HudSchema,
});

export type FrameMessage = z.infer<typeof FrameSchema>;
export type HudFields = z.infer<typeof HudSchema>;

export type ControlKind =
  | "takeover_start"
  | "control"
  | "takeover_end"
  | "heartbeat";

export interface ControlMessage {
  kind: ControlKind;
  steer?: number;
  throttle?: number;
  ts: number;
}

export class ProtocolError extends Error {}

const encoder = new TextEncoder();
const decoder = new TextDecoder();

/** Serialize one message with the 4-byte big-endian length prefix. */
export function encodeMessage(msg: object): Uint8Array {
  const body = encoder.encode(JSON.stringify(msg));
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/** Parse one complete length-prefixed message into a frame. */
export function decodeFrame(data: Uint8Array): FrameMessage {
  if (data.length < 4) throw new ProtocolError("short frame");
  const n = new DataView(data.buffer, data.byteOffset).getUint32(0, false);
  if (data.length !== 4 + n) {
    throw new ProtocolError(`length prefix ${n} != body ${data.length - 4}`);
  }
  return parseFrameJson(decoder.decode(data.subarray(4)));
}

export function parseFrameJson(text: string): FrameMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (exc) {
    throw new ProtocolError(String(exc));
  }
  const result = FrameSchema.safeParse(raw);
  if (!result.success) throw new ProtocolError(result.error.message);
  return result.data;
}

/**
 * Incremental framer for a byte stream that may deliver partial or
 * concatenated messages.
 */
export class FrameReader {
  private pending = new Uint8Array(0);

  push(chunk: Uint8Array): FrameMessage[] {
    const merged = new Uint8Array(this.pending.length + chunk.length);
    merged.set(this.pending, 0);
    merged.set(chunk, this.pending.length);
    this.pending = merged;

    const frames: FrameMessage[] = [];
    for (;;) {
      if (this.pending.length < 4) break;
      const view = new DataView(this.pending.buffer, this.pending.byteOffset);
      const n = view.getUint32(0, false);
      if (this.pending.length < 4 + n) break;
      frames.push(decodeFrame(this.pending.subarray(0, 4 + n)));
      this.pending = this.pending.slice(4 + n);
    }
    return frames;
  }
}
