// Client-side session state: the latest snapshot wins, stale or malformed
// messages are dropped, and outbound commands queue briefly while the socket
// is down.

import {
  CommandPayload,
  ServerMsg,
  StateMsg,
  TerrainMsg,
  encodeCommand,
  encodeReset,
  encodeTerrainSelect,
  parseServerMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

const OFFLINE_QUEUE_MS = 1000;

interface QueuedMessage {
  text: string;
  queuedAt: number;
}

export class SessionState {
  status: ConnectionStatus = "connecting";
  snapshot: StateMsg | null = null;
  terrain: TerrainMsg | null = null;
  lastError = "";
  snapshotCount = 0;
  private lastRenderedSeq = -1;
  private outSeq = 0;
  private queue: QueuedMessage[] = [];
  private sender: ((text: string) => void) | null = null;

  attachSender(send: ((text: string) => void) | null, now: number): void {
    this.sender = send;
    this.status = send ? "connected" : "disconnected";
    if (send) this.flush(now);
  }

  // Returns the parsed message when it advanced the session (never rewinds
  // to an older sequence number).
  accept(text: string): ServerMsg | null {
    const msg = parseServerMessage(text);
    if (msg === null) return null;
    if (msg.seq <= this.lastRenderedSeq) return null; // no time travel
    this.lastRenderedSeq = msg.seq;
    if (msg.type === "state") {
      this.snapshot = msg;
      this.snapshotCount += 1;
    } else if (msg.type === "terrain") {
      this.terrain = msg;
    } else if (msg.type === "error") {
      this.lastError = msg.message;
    }
    return msg;
  }

  private nextSeq(): number {
    this.outSeq += 1;
    return this.outSeq;
  }

  private dispatch(text: string, now: number): void {
    if (this.sender) {
      this.sender(text);
    } else {
      this.queue.push({ text, queuedAt: now });
    }
  }

  // Drops anything that sat in the offline queue for more than a second.
  flush(now: number): void {
    const fresh = this.queue.filter((m) => now - m.queuedAt <= OFFLINE_QUEUE_MS);
    this.queue = [];
    if (this.sender) for (const m of fresh) this.sender(m.text);
    else this.queue = fresh;
  }

  sendCommand(payload: CommandPayload, now: number): void {
    this.dispatch(encodeCommand(this.nextSeq(), payload), now);
  }

  sendReset(now: number): void {
    this.dispatch(encodeReset(this.nextSeq(), ), now);
  }

  sendTerrainSelect(kind: string, level: number, now: number): void {
    this.dispatch(encodeTerrainSelect(this.nextSeq(), kind, level), now);
  }

  get lastSentSeq(): number {
    return this.outSeq;
  }

  get queuedCount(): number {
    return this.queue.length;
  }
}
