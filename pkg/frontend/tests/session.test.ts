import { describe, expect, it } from "vitest";
import { SessionState } from "../src/session.js";

function stateMsg(seq: number, x = 1.0): string {
  return JSON.stringify({
    type: "state",
    seq,
    t: 0.1 * seq,
    sim: { x, z: 0.5, pitch: 0, vx: 0, vz: 0, pitch_rate: 0,
           joints: [0, 0, 0, 0], wheel_angles: [0, 0] },
    wheels: [],
    command: { direction: 0, height_delta: 0, bool: 0 },
    obs: { dir: 0, h_target: 0.5, b: 0, pitch_rate_scaled: 0 },
  });
}

describe("SessionState", () => {
  it("keeps the freshest snapshot and refuses time travel", () => {
    const s = new SessionState();
    expect(s.accept(stateMsg(5, 1.0))?.seq).toBe(5);
    expect(s.accept(stateMsg(4, 99))).toBeNull();   // stale: dropped
    expect(s.snapshot?.sim.x).toBe(1.0);
    expect(s.accept(stateMsg(6, 2.0))?.seq).toBe(6);
    expect(s.snapshot?.sim.x).toBe(2.0);
    expect(s.snapshotCount).toBe(2);
  });

  it("ignores malformed payloads without touching state", () => {
    const s = new SessionState();
    s.accept(stateMsg(1));
    expect(s.accept("garbage")).toBeNull();
    expect(s.snapshot?.seq).toBe(1);
  });

  it("assigns fresh monotone sequence numbers to outbound commands", () => {
    const sent: string[] = [];
    const s = new SessionState();
    s.attachSender((t) => sent.push(t), 0);
    s.sendCommand({ direction: 1 }, 0);
    s.sendCommand({ direction: 0 }, 10);
    s.sendReset(20);
    const seqs = sent.map((t) => JSON.parse(t).seq);
    expect(seqs).toEqual([1, 2, 3]);
    expect(s.lastSentSeq).toBe(3);
  });

  it("queues commands while disconnected and drops them after a second", () => {
    const sent: string[] = [];
    const s = new SessionState();
    s.sendCommand({ direction: 1 }, 1000);   // offline: queued
    s.sendCommand({ direction: -1 }, 1900);
    expect(s.queuedCount).toBe(2);
    s.attachSender((t) => sent.push(t), 2100); // first one is now stale
    expect(sent.length).toBe(1);
    expect(JSON.parse(sent[0]).direction).toBe(-1);
  });

  it("tracks terrain and error messages", () => {
    const s = new SessionState();
    s.accept(JSON.stringify({ type: "terrain", seq: 1, kind: "stairs_family",
                              level: 2, points: [[0, 0]] }));
    s.accept(JSON.stringify({ type: "error", seq: 2, message: "bad input" }));
    expect(s.terrain?.kind).toBe("stairs_family");
    expect(s.lastError).toBe("bad input");
  });
});
