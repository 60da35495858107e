import { describe, expect, it } from "vitest";

import type { FrameView } from "../src/api.js";
import { BACKGROUND, COLOR_TABLE, cssColor, renderFrame, type Context2DLike } from "../src/render.js";

class RecordingContext implements Context2DLike {
  fillStyle = "";
  fills: { x: number; y: number; w: number; h: number; style: string }[] = [];
  fillRect(x: number, y: number, w: number, h: number): void {
    this.fills.push({ x, y, w, h, style: this.fillStyle });
  }
}

function frame(cells: [number, number, string][], width = 3, height = 3): FrameView {
  return { width, height, cells, score: 0, step: 0, status: "ongoing" };
}

describe("renderFrame", () => {
  it("draws exactly one darkblue cell at row 1, col 1", () => {
    const ctx = new RecordingContext();
    renderFrame(ctx, frame([[1, 1, "DARKBLUE"]]), 10);
    const cellFills = ctx.fills.filter((f) => f.style !== BACKGROUND);
    expect(cellFills).toEqual([{ x: 10, y: 10, w: 10, h: 10, style: COLOR_TABLE.DARKBLUE }]);
  });

  it("renders an empty frame as a blank grid", () => {
    const ctx = new RecordingContext();
    const drawn = renderFrame(ctx, frame([]), 10);
    expect(drawn).toEqual([]);
    expect(ctx.fills).toEqual([{ x: 0, y: 0, w: 30, h: 30, style: BACKGROUND }]);
  });

  it("returns the drawn cell set equal to the frame cell set", () => {
    const cells: [number, number, string][] = [
      [0, 0, "GOLD"],
      [2, 1, "GREEN"],
      [1, 2, "RED"],
    ];
    const drawn = renderFrame(new RecordingContext(), frame(cells), 8);
    expect(drawn.map((c) => [c.x, c.y, c.color])).toEqual(cells);
  });

  it("is pixel-independent of panel size: same cells at any cell size", () => {
    const cells: [number, number, string][] = [[2, 0, "PURPLE"], [0, 2, "GRAY"]];
    const small = renderFrame(new RecordingContext(), frame(cells), 4);
    const large = renderFrame(new RecordingContext(), frame(cells), 64);
    expect(small).toEqual(large);
  });

  it("maps every palette token to a distinct CSS color", () => {
    const values = Object.values(COLOR_TABLE);
    expect(new Set(values).size).toBe(values.length);
    expect(cssColor("GOLD")).toBe(COLOR_TABLE.GOLD);
    expect(cssColor("NOT_A_COLOR")).toBe("#ff00ff");
  });
});
