// Wire protocol shared with the teleop service: JSON text messages over a
// websocket, every message tagged with a type and a monotone sequence number.

export interface HelloMsg {
  type: "hello";
  seq: number;
  protocol: number;
  control_hz: number;
  snapshot_hz: number;
}

export interface TerrainMsg {
  type: "terrain";
  seq: number;
  kind: string;
  level: number;
  points: [number, number][];
}

export interface WheelState {
  x: number;
  z: number;
  contact: boolean;
  fn: number;
  ft: number;
}

export interface StateMsg {
  type: "state";
  seq: number;
  t: number;
  sim: {
    x: number;
    z: number;
    pitch: number;
    vx: number;
    vz: number;
    pitch_rate: number;
    joints: number[];
    wheel_angles: number[];
  };
  wheels: WheelState[];
  command: { direction: number; height_delta: number; bool: number };
  obs: { dir: number; h_target: number; b: number; pitch_rate_scaled: number };
}

export interface ErrorMsg {
  type: "error";
  seq: number;
  message: string;
}

export type ServerMsg = HelloMsg | TerrainMsg | StateMsg | ErrorMsg;

export interface CommandPayload {
  direction?: number;
  height_delta?: number;
  bool?: number;
}

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, v));

export function encodeCommand(seq: number, payload: CommandPayload): string {
  const msg: Record<string, unknown> = { type: "command", seq };
  if (payload.direction !== undefined)
    msg.direction = clamp(payload.direction, -1, 1);
  if (payload.height_delta !== undefined)
    msg.height_delta = clamp(payload.height_delta, -0.1, 0.1);
  if (payload.bool !== undefined) msg.bool = payload.bool ? 1 : 0;
  return JSON.stringify(msg);
}

export function encodeReset(seq: number): string {
  return JSON.stringify({ type: "reset", seq });
}

export function encodeTerrainSelect(
  seq: number,
  kind: string,
  level: number,
): string {
  return JSON.stringify({
    type: "terrain",
    seq,
    kind,
    level: clamp(Math.round(level), 0, 11),
  });
}

// Returns null for anything that is not a well-formed server message; the
// caller keeps its last good state.
export function parseServerMessage(text: string): ServerMsg | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (typeof msg.seq !== "number") return null;
  switch (msg.type) {
    case "hello":
      return typeof msg.protocol === "number" ? (msg as unknown as HelloMsg) : null;
    case "terrain":
      return Array.isArray(msg.points) ? (msg as unknown as TerrainMsg) : null;
    case "state": {
      const sim = msg.sim as Record<string, unknown> | undefined;
      if (!sim || typeof sim.x !== "number" || typeof sim.z !== "number")
        return null;
      if (!Array.isArray((sim as { joints?: unknown }).joints)) return null;
      return msg as unknown as StateMsg;
    }
    case "error":
      return typeof msg.message === "string" ? (msg as unknown as ErrorMsg) : null;
    default:
      return null;
  }
}
