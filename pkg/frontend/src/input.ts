// Keyboard handling with last-writer-wins commands, a boolean toggle
// debounced per keypress, and an outbound rate cap of 25 Hz.

export interface OutboundCommand {
  direction: number;
  height_delta: number;
  bool: number;
}

export const SEND_INTERVAL_MS = 40; // 25 Hz cap

const HEIGHT_STEP = 0.01;
const HEIGHT_RANGE = 0.1;

export class InputLoop {
  private held = new Set<string>();
  private heightDelta = 0;
  private terrainBool = 0;
  private lastSentAt = -Infinity;
  private lastSent: OutboundCommand | null = null;
  resetRequested = false;

  keyDown(key: string): void {
    if (this.held.has(key)) return; // auto-repeat: toggles fire once per press
    this.held.add(key);
    if (key === "b") this.terrainBool = this.terrainBool ? 0 : 1;
    if (key === "q")
      this.heightDelta = Math.min(HEIGHT_RANGE, this.heightDelta + HEIGHT_STEP);
    if (key === "a")
      this.heightDelta = Math.max(-HEIGHT_RANGE, this.heightDelta - HEIGHT_STEP);
    if (key === "r") this.resetRequested = true;
  }

  keyUp(key: string): void {
    this.held.delete(key);
  }

  get direction(): number {
    const right = this.held.has("ArrowRight") ? 1 : 0;
    const left = this.held.has("ArrowLeft") ? 1 : 0;
    return right - left; // no input -> 0 (hold position)
  }

  get boolState(): number {
    return this.terrainBool;
  }

  setBoolState(v: number): void {
    this.terrainBool = v ? 1 : 0;
  }

  get height(): number {
    return this.heightDelta;
  }

  current(): OutboundCommand {
    return {
      direction: this.direction,
      height_delta: this.heightDelta,
      bool: this.terrainBool,
    };
  }

  // Called every frame; returns a command to send or null. Sends at most
  // every SEND_INTERVAL_MS, and always re-sends on a changed command so the
  // service converges to the latest intent.
  poll(nowMs: number): OutboundCommand | null {
    if (nowMs - this.lastSentAt < SEND_INTERVAL_MS) return null;
    const cmd = this.current();
    const changed =
      this.lastSent === null ||
      cmd.direction !== this.lastSent.direction ||
      cmd.height_delta !== this.lastSent.height_delta ||
      cmd.bool !== this.lastSent.bool;
    // heartbeat the held direction so a dropped packet cannot stick the robot
    const heartbeat = nowMs - this.lastSentAt >= edgeInterval(cmd);
    if (!changed && !heartbeat) return null;
    this.lastSentAt = nowMs;
    this.lastSent = cmd;
    return cmd;
  }

  takeReset(): boolean {
    const r = this.resetRequested;
    this.resetRequested = false;
    return r;
  }
}

function edgeInterval(cmd: OutboundCommand): number {
  // moving commands heartbeat at the cap; idle ones at 1 Hz
  return cmd.direction !== 0 ? SEND_INTERVAL_MS : 1000;
}
