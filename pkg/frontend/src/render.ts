// Side-view canvas rendering: terrain profile, robot from joint angles via
// forward kinematics, contact force arrows, and a HUD.

import { StateMsg, TerrainMsg } from "./protocol.js";

// mirror of the simulator's morphology
export const UPPER_LEN = 0.25;
export const LOWER_LEN = 0.25;
export const WHEEL_RADIUS = 0.1;

export interface Vec2 {
  x: number;
  z: number;
}

export interface LegPose {
  knee: Vec2;
  wheel: Vec2;
}

// Links point straight down at zero angle; positive angles swing forward.
export function legForwardKinematics(
  base: Vec2,
  pitch: number,
  hip: number,
  knee: number,
): LegPose {
  const phiU = pitch + hip;
  const phiL = phiU + knee;
  const kneePt = {
    x: base.x + UPPER_LEN * Math.sin(phiU),
    z: base.z - UPPER_LEN * Math.cos(phiU),
  };
  return {
    knee: kneePt,
    wheel: {
      x: kneePt.x + LOWER_LEN * Math.sin(phiL),
      z: kneePt.z - LOWER_LEN * Math.cos(phiL),
    },
  };
}

export interface Camera {
  centerX: number;
  centerZ: number;
  pixelsPerMetre: number;
  width: number;
  height: number;
}

export function worldToScreen(cam: Camera, p: Vec2): [number, number] {
  return [
    cam.width / 2 + (p.x - cam.centerX) * cam.pixelsPerMetre,
    cam.height / 2 - (p.z - cam.centerZ) * cam.pixelsPerMetre,
  ];
}

const FORCE_SCALE = 0.004; // metres of arrow per newton

export class Renderer {
  private cam: Camera;

  constructor(
    private ctx: CanvasRenderingContext2D,
    width: number,
    height: number,
  ) {
    this.cam = {
      centerX: 3,
      centerZ: 0.6,
      pixelsPerMetre: Math.min(width / 4.2, height / 2.4),
      width,
      height,
    };
  }

  // Draws one frame; a null snapshot just paints the backdrop and HUD note.
  render(snapshot: StateMsg | null, terrain: TerrainMsg | null, status: string): void {
    const { ctx } = this;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, this.cam.width, this.cam.height);
    if (snapshot) {
      this.cam.centerX = snapshot.sim.x;
      this.cam.centerZ = snapshot.sim.z + 0.1;
    }
    if (terrain) this.drawTerrain(terrain);
    if (snapshot) {
      this.drawRobot(snapshot);
      this.drawHud(snapshot, status);
    } else {
      ctx.fillStyle = "#8899aa";
      ctx.font = "16px monospace";
      ctx.fillText(`waiting for state (${status})`, 20, 30);
    }
  }

  private drawTerrain(terrain: TerrainMsg): void {
    const { ctx } = this;
    ctx.beginPath();
    const pts = terrain.points;
    if (!pts.length) return;
    let [sx, sy] = worldToScreen(this.cam, { x: pts[0][0], z: pts[0][1] });
    ctx.moveTo(sx, sy);
    for (const [x, z] of pts) {
      [sx, sy] = worldToScreen(this.cam, { x, z });
      ctx.lineTo(sx, sy);
    }
    ctx.strokeStyle = "#5f8f5f";
    ctx.lineWidth = 2;
    ctx.stroke();
    const [ex, ey] = worldToScreen(this.cam, {
      x: pts[pts.length - 1][0],
      z: pts[pts.length - 1][1],
    });
    ctx.lineTo(ex, this.cam.height);
    ctx.lineTo(worldToScreen(this.cam, { x: pts[0][0], z: 0 })[0], this.cam.height);
    ctx.closePath();
    ctx.fillStyle = "#223322";
    ctx.fill();
  }

  private drawRobot(s: StateMsg): void {
    const { ctx } = this;
    const base = { x: s.sim.x, z: s.sim.z };
    const [hipL, kneeL, hipR, kneeR] = s.sim.joints;
    const legs = [
      legForwardKinematics(base, s.sim.pitch, hipL, kneeL),
      legForwardKinematics(base, s.sim.pitch, hipR, kneeR),
    ];
    const colors = ["#d9823b", "#7bb0e0"];
    legs.forEach((leg, i) => {
      ctx.strokeStyle = colors[i];
      ctx.lineWidth = 4;
      ctx.beginPath();
      const [bx, by] = worldToScreen(this.cam, base);
      const [kx, ky] = worldToScreen(this.cam, leg.knee);
      const [wx, wy] = worldToScreen(this.cam, leg.wheel);
      ctx.moveTo(bx, by);
      ctx.lineTo(kx, ky);
      ctx.lineTo(wx, wy);
      ctx.stroke();
      // wheel with a spoke showing rotation
      ctx.beginPath();
      ctx.arc(wx, wy, WHEEL_RADIUS * this.cam.pixelsPerMetre, 0, 2 * Math.PI);
      ctx.stroke();
      const spoke = s.sim.wheel_angles[i];
      ctx.beginPath();
      ctx.moveTo(wx, wy);
      ctx.lineTo(
        wx + WHEEL_RADIUS * this.cam.pixelsPerMetre * Math.sin(spoke),
        wy + WHEEL_RADIUS * this.cam.pixelsPerMetre * Math.cos(spoke),
      );
      ctx.stroke();
    });

    // base body: a box above the hip point, tilted by pitch
    const [bx, by] = worldToScreen(this.cam, base);
    ctx.save();
    ctx.translate(bx, by);
    ctx.rotate(-s.sim.pitch);
    ctx.fillStyle = "#c7cbd6";
    const w = 0.3 * this.cam.pixelsPerMetre;
    const h = 0.18 * this.cam.pixelsPerMetre;
    ctx.fillRect(-w / 2, -h, w, h);
    ctx.restore();

    for (const wheel of s.wheels) {
      if (!wheel.contact || (wheel.fn === 0 && wheel.ft === 0)) continue;
      const from = worldToScreen(this.cam, { x: wheel.x, z: wheel.z - WHEEL_RADIUS });
      const to = worldToScreen(this.cam, {
        x: wheel.x + wheel.ft * FORCE_SCALE,
        z: wheel.z - WHEEL_RADIUS + wheel.fn * FORCE_SCALE,
      });
      ctx.strokeStyle = "#e5d352";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(from[0], from[1]);
      ctx.lineTo(to[0], to[1]);
      ctx.stroke();
    }
  }

  private drawHud(s: StateMsg, status: string): void {
    const { ctx } = this;
    ctx.font = "14px monospace";
    ctx.fillStyle = "#aab4c4";
    const lines = [
      `status: ${status}`,
      `t=${s.t.toFixed(2)}s  x=${s.sim.x.toFixed(2)}m  vx=${s.sim.vx.toFixed(2)}m/s`,
      `dir=${s.command.direction.toFixed(2)}  h_target_delta=${s.command.height_delta.toFixed(3)}m`,
      `keys: arrows drive | q/a height | b stair mode | r reset | 1-6 terrain`,
    ];
    lines.forEach((line, i) => ctx.fillText(line, 14, 22 + 18 * i));
    if (s.command.bool >= 0.5) {
      ctx.fillStyle = "#e4b33c";
      ctx.font = "bold 18px monospace";
      ctx.fillText("STAIR MODE", this.cam.width - 140, 30);
    }
  }
}
