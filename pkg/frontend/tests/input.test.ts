import { describe, expect, it } from "vitest";
import { InputLoop, SEND_INTERVAL_MS } from "../src/input.js";

describe("InputLoop", () => {
  it("maps arrow keys to a direction and releases back to zero", () => {
    const input = new InputLoop();
    expect(input.direction).toBe(0);   // no input: hold position
    input.keyDown("ArrowRight");
    expect(input.direction).toBe(1);
    input.keyDown("ArrowLeft");
    expect(input.direction).toBe(0);   // both held cancel out
    input.keyUp("ArrowRight");
    expect(input.direction).toBe(-1);
    input.keyUp("ArrowLeft");
    expect(input.direction).toBe(0);
  });

  it("toggling twice returns the boolean to its original value", () => {
    const input = new InputLoop();
    expect(input.boolState).toBe(0);
    input.keyDown("b");
    input.keyUp("b");
    expect(input.boolState).toBe(1);
    input.keyDown("b");
    input.keyUp("b");
    expect(input.boolState).toBe(0);
  });

  it("held keys do not retrigger the toggle (debounce)", () => {
    const input = new InputLoop();
    input.keyDown("b");
    input.keyDown("b");   // auto-repeat while held
    input.keyDown("b");
    expect(input.boolState).toBe(1);
  });

  it("height keys nudge within +-0.1 m", () => {
    const input = new InputLoop();
    for (let i = 0; i < 30; i++) {
      input.keyDown("q");
      input.keyUp("q");
    }
    expect(input.height).toBeCloseTo(0.1);
    for (let i = 0; i < 60; i++) {
      input.keyDown("a");
      input.keyUp("a");
    }
    expect(input.height).toBeCloseTo(-0.1);
  });

  it("never exceeds 25 Hz outbound even under rapid keypresses", () => {
    const input = new InputLoop();
    let sent = 0;
    let now = 0;
    // hammer the keys while polling at 240 fps for one second
    for (let frame = 0; frame < 240; frame++) {
      now = (frame * 1000) / 240;
      if (frame % 2 === 0) input.keyDown(frame % 4 === 0 ? "ArrowRight" : "ArrowLeft");
      else {
        input.keyUp("ArrowRight");
        input.keyUp("ArrowLeft");
      }
      if (input.poll(now)) sent++;
    }
    expect(sent).toBeLessThanOrEqual(Math.ceil(1000 / SEND_INTERVAL_MS));
    expect(sent).toBeGreaterThan(0);
  });

  it("re-sends promptly when the command changes", () => {
    const input = new InputLoop();
    expect(input.poll(0)).not.toBeNull();      // initial state goes out
    expect(input.poll(10)).toBeNull();         // within the rate cap
    input.keyDown("ArrowRight");
    expect(input.poll(30)).toBeNull();         // still capped
    const cmd = input.poll(45);
    expect(cmd?.direction).toBe(1);
  });

  it("reset requests latch until taken", () => {
    const input = new InputLoop();
    expect(input.takeReset()).toBe(false);
    input.keyDown("r");
    expect(input.takeReset()).toBe(true);
    expect(input.takeReset()).toBe(false);
  });
});
