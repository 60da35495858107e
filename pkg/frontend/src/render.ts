/** Canvas rendering of server frames. One filled square per (x, y, color)
 * cell; output depends only on the frame and the cell size, never on the
 * panel the canvas sits in. */

import type { FrameView } from "./api.js";

/** Color tokens as assigned by the server, mapped to fixed CSS colors.
 * This is the single source of truth shared with the documentation. */
export const COLOR_TABLE: Record<string, string> = {
  DARKBLUE: "#00008b",
  GREEN: "#228b22",
  ORANGE: "#ff8c00",
  GOLD: "#ffd700",
  RED: "#d22b2b",
  PURPLE: "#800080",
  BROWN: "#8b4513",
  PINK: "#ff69b4",
  LIGHTBLUE: "#87cefa",
  GRAY: "#808080",
  YELLOW: "#ffff00",
  WHITE: "#f5f5f5",
};

export const BACKGROUND = "#111111";

/** The subset of CanvasRenderingContext2D the renderer needs; tests drive it
 * with a recording fake. */
export interface Context2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
}

export interface DrawnCell {
  x: number;
  y: number;
  color: string;
}

export function cssColor(token: string): string {
  return COLOR_TABLE[token] ?? "#ff00ff"; // loud magenta for unknown tokens
}

/** Paint a frame onto a 2D context and return the cell set that was drawn
 * (grid coordinates + color tokens), for fidelity checks. */
export function renderFrame(
  ctx: Context2DLike,
  frame: FrameView,
  cellSize: number,
): DrawnCell[] {
  ctx.fillStyle = BACKGROUND;
  ctx.fillRect(0, 0, frame.width * cellSize, frame.height * cellSize);
  const drawn: DrawnCell[] = [];
  for (const [x, y, color] of frame.cells) {
    ctx.fillStyle = cssColor(color);
    ctx.fillRect(x * cellSize, y * cellSize, cellSize, cellSize);
    drawn.push({ x, y, color });
  }
  return drawn;
}
