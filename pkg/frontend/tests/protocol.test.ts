import { describe, expect, it } from "vitest";
import {
  encodeCommand,
  encodeReset,
  encodeTerrainSelect,
  parseServerMessage,
} from "../src/protocol.js";

describe("command encoding", () => {
  it("round-trips fields and carries the sequence number", () => {
    const msg = JSON.parse(
      encodeCommand(7, { direction: 0.5, height_delta: -0.02, bool: 1 }),
    );
    expect(msg).toEqual({
      type: "command",
      seq: 7,
      direction: 0.5,
      height_delta: -0.02,
      bool: 1,
    });
  });

  it("clamps out-of-range values", () => {
    const msg = JSON.parse(
      encodeCommand(1, { direction: 4, height_delta: 2, bool: 5 }),
    );
    expect(msg.direction).toBe(1);
    expect(msg.height_delta).toBeCloseTo(0.1);
    expect(msg.bool).toBe(1);
  });

  it("omits unset fields so the service keeps previous values", () => {
    const msg = JSON.parse(encodeCommand(2, { direction: -1 }));
    expect(msg.direction).toBe(-1);
    expect("height_delta" in msg).toBe(false);
    expect("bool" in msg).toBe(false);
  });

  it("encodes reset and terrain selection", () => {
    expect(JSON.parse(encodeReset(3))).toEqual({ type: "reset", seq: 3 });
    const terrain = JSON.parse(encodeTerrainSelect(4, "smooth_slope", 14.7));
    expect(terrain).toEqual({
      type: "terrain",
      seq: 4,
      kind: "smooth_slope",
      level: 11,
    });
  });
});

describe("server message parsing", () => {
  const state = {
    type: "state",
    seq: 10,
    t: 1.5,
    sim: { x: 2, z: 0.5, pitch: 0.01, vx: 0.2, vz: 0, pitch_rate: 0,
           joints: [0.6, -1.2, 0.6, -1.2], wheel_angles: [0, 0] },
    wheels: [],
    command: { direction: 0, height_delta: 0, bool: 1 },
    obs: { dir: 0, h_target: 0.5, b: 1, pitch_rate_scaled: 0 },
  };

  it("accepts well-formed state messages", () => {
    const msg = parseServerMessage(JSON.stringify(state));
    expect(msg?.type).toBe("state");
  });

  it("rejects garbage, wrong types, and missing fields", () => {
    expect(parseServerMessage("not json at all")).toBeNull();
    expect(parseServerMessage("42")).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "state" }))).toBeNull();
    expect(
      parseServerMessage(JSON.stringify({ type: "mystery", seq: 1 })),
    ).toBeNull();
    const noJoints = { ...state, sim: { ...state.sim, joints: undefined } };
    expect(parseServerMessage(JSON.stringify(noJoints))).toBeNull();
  });

  it("accepts hello, terrain and error messages", () => {
    expect(
      parseServerMessage(
        JSON.stringify({ type: "hello", seq: 1, protocol: 1, control_hz: 50,
                         snapshot_hz: 25 }),
      )?.type,
    ).toBe("hello");
    expect(
      parseServerMessage(
        JSON.stringify({ type: "terrain", seq: 2, kind: "stairs_family",
                         level: 3, points: [[0, 0], [6, 0]] }),
      )?.type,
    ).toBe("terrain");
    expect(
      parseServerMessage(
        JSON.stringify({ type: "error", seq: 3, message: "nope" }),
      )?.type,
    ).toBe("error");
  });
});
