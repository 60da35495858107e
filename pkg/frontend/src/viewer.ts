/** Replay viewer state: scrubber position plus the step-synchronised panels
 * (canvas frame, rationale text, action histogram, reasoning-length series).
 * Every panel always reflects the same step index. */

import type { ArenaApi, FrameView, Replay } from "./api.js";
import { ApiError } from "./api.js";

export const ACTIONS = ["up", "down", "left", "right", "action", "wait"] as const;

export interface ViewerState {
  traceId: string;
  step: number; // 0 = initial frame, k = after the k-th recorded action
  playing: boolean;
  frame: FrameView;
  /** Rationale of the action taken at this scrubber position (the step the
   * frame resulted from), or null at position 0 / for action-only traces. */
  rationale: string | null;
  /** Action counts over steps 0..step-1, keyed in fixed action order. */
  actionHistogram: Record<string, number>;
  /** reasoning_chars per step up to the current position, pass-through. */
  reasoningSeries: number[];
  /** "won"/"lost" when the current position sits on an episode boundary. */
  outcomeMarker: string | null;
  /** StepOutOfRange and similar server complaints, surfaced inline. */
  error: string | null;
}

export function actionHistogram(replay: Replay, upToStep: number): Record<string, number> {
  const counts: Record<string, number> = {};
  for (const action of ACTIONS) counts[action] = 0;
  for (const rec of replay.steps.slice(0, upToStep)) {
    counts[rec.action] = (counts[rec.action] ?? 0) + 1;
  }
  return counts;
}

export function reasoningSeries(replay: Replay, upToStep: number): number[] {
  return replay.steps.slice(0, upToStep).map((rec) => rec.reasoning_chars);
}

/** Move the scrubber: fetch the server-reconstructed frame for `step` and
 * rebuild every panel from the same step index. */
export async function scrub(
  api: ArenaApi,
  replay: Replay,
  traceId: string,
  step: number,
  playing = false,
): Promise<ViewerState> {
  let frame: FrameView;
  try {
    frame = await api.replayFrame(traceId, step);
  } catch (err) {
    if (err instanceof ApiError) {
      return {
        traceId,
        step,
        playing: false,
        frame: { width: 0, height: 0, cells: [], score: 0, step: 0, status: "ongoing" },
        rationale: null,
        actionHistogram: actionHistogram(replay, 0),
        reasoningSeries: [],
        outcomeMarker: null,
        error: err.detail.message,
      };
    }
    throw err;
  }
  const current = step > 0 ? replay.steps[step - 1] : null;
  const status = current?.status_after ?? "ongoing";
  return {
    traceId,
    step,
    playing,
    frame,
    rationale: current?.rationale ?? null,
    actionHistogram: actionHistogram(replay, step),
    reasoningSeries: reasoningSeries(replay, step),
    outcomeMarker: status !== "ongoing" ? status : null,
    error: null,
  };
}
