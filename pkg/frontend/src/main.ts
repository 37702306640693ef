// Entry point: connect to the teleop service, pump keyboard commands at
// most 25 Hz, and render the latest snapshot every animation frame.

import { InputLoop } from "./input.js";
import { Renderer } from "./render.js";
import { SessionState } from "./session.js";

const params = new URLSearchParams(window.location.search);
const port = params.get("port") ?? "8765";
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const url = `ws://${host || "127.0.0.1"}:${port}`;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const renderer = new Renderer(ctx, canvas.width, canvas.height);
const session = new SessionState();
const input = new InputLoop();

const TERRAIN_KEYS: Record<string, [string, number]> = {
  "1": ["stairs_family", 2],
  "2": ["stairs_family", 8],
  "3": ["smooth_slope", 6],
  "4": ["discrete_obstacles", 6],
  "5": ["smooth_pyramid", 6],
  "6": ["rough_pyramid", 6],
};

function connect(): void {
  const ws = new WebSocket(url);
  ws.onopen = () => session.attachSender((text) => ws.send(text), performance.now());
  ws.onmessage = (ev) => {
    const msg = session.accept(String(ev.data));
    if (msg && msg.type === "state") {
      // keep the local toggle in sync with what the service applied
      input.setBoolState(msg.command.bool >= 0.5 ? 1 : 0);
    }
  };
  ws.onclose = () => {
    session.attachSender(null, performance.now());
    setTimeout(connect, 500); // UI keeps rendering from the last snapshot
  };
  ws.onerror = () => ws.close();
}

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  const terrain = TERRAIN_KEYS[ev.key];
  if (terrain) {
    session.sendTerrainSelect(terrain[0], terrain[1], performance.now());
    return;
  }
  input.keyDown(ev.key);
});
window.addEventListener("keyup", (ev) => input.keyUp(ev.key));

function frame(): void {
  const now = performance.now();
  if (input.takeReset()) session.sendReset(now);
  const cmd = input.poll(now);
  if (cmd) session.sendCommand(cmd, now);
  renderer.render(session.snapshot, session.terrain, session.status);
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
