import { describe, expect, it } from "vitest";
import {
  FrameReader,
  ProtocolError,
  decodeFrame,
  encodeMessage,
  parseFrameJson,
} from "../src/protocol.js";
import { Store } from "../src/store.js";
import { makeFrame } from "./mockBridge.js";

describe("wire framing", () => {
  it("round-trips a frame through the length-prefixed encoding", () => {
    const frame = makeFrame({ t: 7 });
    const bytes = encodeMessage(frame);
    expect(decodeFrame(bytes).t).toBe(7);
    expect(decodeFrame(bytes).av.v).toBe(5);
  });

  it("uses a 4-byte big-endian length prefix", () => {
    const bytes = encodeMessage(makeFrame());
    const n = new DataView(bytes.buffer).getUint32(0, false);
    expect(n).toBe(bytes.length - 4);
  });

  it("rejects truncated and over-long payloads", () => {
    const bytes = encodeMessage(makeFrame());
    expect(() => decodeFrame(bytes.subarray(0, bytes.length - 1))).toThrow(ProtocolError);
    expect(() => decodeFrame(new Uint8Array([0, 0]))).toThrow(ProtocolError);
  });

  it("rejects frames missing required fields", () => {
    expect(() => parseFrameJson('{"t": 1}')).toThrow(ProtocolError);
    expect(() => parseFrameJson("not json")).toThrow(ProtocolError);
  });

  it("reassembles frames split across arbitrary chunks", () => {
    const reader = new FrameReader();
    const a = encodeMessage(makeFrame({ t: 1 }));
    const b = encodeMessage(makeFrame({ t: 2 }));
    const joined = new Uint8Array([...a, ...b]);
    const got: number[] = [];
    for (let i = 0; i < joined.length; i += 3) {
      for (const f of reader.push(joined.subarray(i, i + 3))) got.push(f.t);
    }
    expect(got).toEqual([1, 2]);
  });
});

describe("schema versioning", () => {
  it("unknown schema_version flips the store to read-only banner mode", () => {
    const store = new Store();
    store.ingestFrame(makeFrame({ schema_version: 99 }));
    expect(store.scene.schemaMismatch).toBe(true);
    expect(store.scene.controlsEnabled).toBe(false);
    // The frame itself still renders: no crash, read-only view.
    expect(store.scene.frame?.t).toBe(0);
  });

  it("matching schema_version keeps controls enabled", () => {
    const store = new Store();
    store.ingestFrame(makeFrame());
    expect(store.scene.schemaMismatch).toBe(false);
    expect(store.scene.controlsEnabled).toBe(true);
  });
});
