import { describe, expect, it } from "vitest";
import {
  Renderer,
  legForwardKinematics,
  worldToScreen,
} from "../src/render.js";
import type { StateMsg, TerrainMsg } from "../src/protocol.js";

describe("leg forward kinematics", () => {
  it("zero joint angles put the wheel straight below the hip", () => {
    const pose = legForwardKinematics({ x: 1, z: 0.6 }, 0, 0, 0);
    expect(pose.knee.x).toBeCloseTo(1);
    expect(pose.knee.z).toBeCloseTo(0.35);
    expect(pose.wheel.x).toBeCloseTo(1);
    expect(pose.wheel.z).toBeCloseTo(0.1);
  });

  it("the default crouch folds the wheel back under the base", () => {
    const pose = legForwardKinematics({ x: 0, z: 0.5127 }, 0, 0.6, -1.2);
    expect(pose.wheel.x).toBeCloseTo(0, 5);
    expect(pose.wheel.z).toBeCloseTo(0.1, 3);
  });

  it("pitch rotates the whole leg", () => {
    const flat = legForwardKinematics({ x: 0, z: 0.6 }, 0, 0, 0);
    const tipped = legForwardKinematics({ x: 0, z: 0.6 }, 0.3, 0, 0);
    expect(tipped.wheel.x).toBeGreaterThan(flat.wheel.x);
  });
});

describe("camera transform", () => {
  it("centers the camera and flips z", () => {
    const cam = { centerX: 3, centerZ: 0.5, pixelsPerMetre: 100,
                  width: 800, height: 400 };
    expect(worldToScreen(cam, { x: 3, z: 0.5 })).toEqual([400, 200]);
    const [, upY] = worldToScreen(cam, { x: 3, z: 1.0 });
    expect(upY).toBeLessThan(200);
  });
});

// minimal 2D-context stand-in that records draw calls
function fakeContext() {
  const calls: string[] = [];
  const texts: string[] = [];
  const ctx = new Proxy(
    {
      fillText: (t: string) => {
        texts.push(t);
        calls.push("fillText");
      },
    },
    {
      get(target, prop: string) {
        if (prop in target) return (target as Record<string, unknown>)[prop];
        return (...args: unknown[]) => calls.push(prop);
      },
      set() {
        return true;
      },
    },
  ) as unknown as CanvasRenderingContext2D;
  return { ctx, calls, texts };
}

const snapshot: StateMsg = {
  type: "state", seq: 5, t: 1.0,
  sim: { x: 2.5, z: 0.5, pitch: 0.05, vx: 0.3, vz: 0, pitch_rate: 0,
         joints: [0.6, -1.2, 0.6, -1.2], wheel_angles: [0.5, -0.5] },
  wheels: [
    { x: 2.5, z: 0.1, contact: true, fn: 58, ft: 3 },
    { x: 2.5, z: 0.1, contact: false, fn: 0, ft: 0 },
  ],
  command: { direction: 1, height_delta: 0, bool: 1 },
  obs: { dir: 1, h_target: 0.5, b: 1, pitch_rate_scaled: 0 },
};

const terrain: TerrainMsg = {
  type: "terrain", seq: 1, kind: "stairs_family", level: 2,
  points: [[0, 0], [3, 0], [3, 0.15], [6, 0.15]],
};

describe("Renderer", () => {
  it("shows the stair-mode badge when the boolean is on", () => {
    const { ctx, texts } = fakeContext();
    new Renderer(ctx, 800, 400).render(snapshot, terrain, "connected");
    expect(texts.some((t) => t.includes("STAIR MODE"))).toBe(true);
  });

  it("hides the badge when the boolean is off", () => {
    const { ctx, texts } = fakeContext();
    const boolOff = { ...snapshot,
                      command: { ...snapshot.command, bool: 0 } };
    new Renderer(ctx, 800, 400).render(boolOff, terrain, "connected");
    expect(texts.some((t) => t.includes("STAIR MODE"))).toBe(false);
  });

  it("renders a waiting notice with no snapshot", () => {
    const { ctx, texts } = fakeContext();
    new Renderer(ctx, 800, 400).render(null, null, "connecting");
    expect(texts.some((t) => t.includes("waiting"))).toBe(true);
  });

  it("draws without throwing on a full snapshot", () => {
    const { ctx, calls } = fakeContext();
    new Renderer(ctx, 800, 400).render(snapshot, terrain, "connected");
    expect(calls.filter((c) => c === "stroke").length).toBeGreaterThan(3);
  });
});
