/** Browser entry point: wires the catalogue, replay viewer, rule editor and
 * live play panels to the DOM. All game logic lives server-side. */

import { ApiError, ArenaApi, type Replay } from "./api.js";
import { loadCatalogue, badgeLabel } from "./catalogue.js";
import { LivePlay } from "./liveplay.js";
import { renderFrame } from "./render.js";
import { ACTIONS, scrub, type ViewerState } from "./viewer.js";

const CELL = 24;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function ctx2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  return ctx;
}

function renderPanels(state: ViewerState, replay: Replay): void {
  const canvas = el<HTMLCanvasElement>("replay-canvas");
  canvas.width = state.frame.width * CELL;
  canvas.height = state.frame.height * CELL;
  renderFrame(ctx2d(canvas), state.frame, CELL);

  el("replay-step").textContent = `step ${state.step} / ${replay.steps.length}`;
  el("rationale").textContent = state.rationale ?? "(no rationale recorded)";
  el("outcome-marker").textContent = state.outcomeMarker ?? "";
  el("replay-error").textContent = state.error ?? "";

  const histogram = el("action-histogram");
  histogram.replaceChildren();
  const max = Math.max(1, ...Object.values(state.actionHistogram));
  for (const action of ACTIONS) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const bar = document.createElement("span");
    bar.className = "bar";
    bar.style.width = `${(100 * (state.actionHistogram[action] ?? 0)) / max}%`;
    row.append(`${action} `, bar, ` ${state.actionHistogram[action] ?? 0}`);
    histogram.append(row);
  }

  const series = el<HTMLCanvasElement>("reasoning-series");
  const sctx = ctx2d(series);
  sctx.clearRect(0, 0, series.width, series.height);
  const peak = Math.max(1, ...state.reasoningSeries);
  sctx.strokeStyle = "#87cefa";
  sctx.beginPath();
  state.reasoningSeries.forEach((chars, i) => {
    const x = (i / Math.max(1, replay.steps.length - 1)) * series.width;
    const y = series.height - (chars / peak) * series.height;
    i === 0 ? sctx.moveTo(x, y) : sctx.lineTo(x, y);
  });
  sctx.stroke();
}

async function openReplay(api: ArenaApi, traceId: string): Promise<void> {
  const replay = await api.replay(traceId);
  const scrubber = el<HTMLInputElement>("scrubber");
  scrubber.max = String(replay.steps.length);
  scrubber.value = "0";
  let current = 0;

  const goto = async (step: number) => {
    current = Math.max(0, Math.min(replay.steps.length, step));
    scrubber.value = String(current);
    renderPanels(await scrub(api, replay, traceId, current), replay);
  };

  scrubber.oninput = () => void goto(Number(scrubber.value));
  el("step-back").onclick = () => void goto(current - 1);
  el("step-fwd").onclick = () => void goto(current + 1);
  document.onkeydown = (ev) => {
    if (ev.key === "ArrowLeft") void goto(current - 1);
    if (ev.key === "ArrowRight") void goto(current + 1);
  };
  await goto(0);
}

async function refreshCatalogue(api: ArenaApi): Promise<void> {
  const list = el("catalogue");
  list.replaceChildren();
  for (const group of await loadCatalogue(api)) {
    const heading = document.createElement("h3");
    heading.textContent = group.agent;
    list.append(heading);
    for (const entry of group.entries) {
      const button = document.createElement("button");
      button.textContent = `${entry.game} seed ${entry.seed} — ${badgeLabel(entry)}`;
      button.onclick = () => void openReplay(api, entry.trace_id);
      list.append(button);
    }
  }
}

async function startLivePlay(api: ArenaApi): Promise<void> {
  const bundle = el<HTMLSelectElement>("bundle-select").value;
  const description = el<HTMLTextAreaElement>("rule-editor").value || undefined;
  const errorBox = el("live-error");
  errorBox.textContent = "";
  let opened;
  try {
    opened = await api.createSession({ bundle, description, owner: "human" });
  } catch (err) {
    if (err instanceof ApiError) {
      const where = err.detail.line !== undefined ? ` (line ${err.detail.line})` : "";
      errorBox.textContent = err.detail.message + where;
      return;
    }
    throw err;
  }

  const canvas = el<HTMLCanvasElement>("live-canvas");
  const socket = new WebSocket(api.liveUrl(opened.session_id));
  const play = new LivePlay(socket, {
    onFrame: (frame) => {
      canvas.width = frame.width * CELL;
      canvas.height = frame.height * CELL;
      renderFrame(ctx2d(canvas), frame, CELL);
      el("live-score").textContent = `score ${frame.score}`;
    },
    onOutcome: (status) => {
      const toast = el("toast");
      toast.textContent = status === "won" ? "You won! Level resets." : "You lost. Try again.";
      setTimeout(() => (toast.textContent = ""), 2500);
    },
    onError: (message) => (errorBox.textContent = message),
    onDisconnect: () => (el("disconnect-banner").textContent = "Disconnected — refresh to reconnect."),
  });
  canvas.focus();
  canvas.onkeydown = (ev) => {
    if (play.handleKey(ev.key) !== null) ev.preventDefault();
  };
  el("end-session").onclick = () => {
    play.close();
    void api.closeSession(opened.session_id).then(() => refreshCatalogue(api));
  };
}

export async function boot(): Promise<void> {
  const api = new ArenaApi("");
  const select = el<HTMLSelectElement>("bundle-select");
  for (const name of await api.bundles()) {
    const option = document.createElement("option");
    option.value = option.textContent = name;
    select.append(option);
  }
  select.onchange = async () => {
    el<HTMLTextAreaElement>("rule-editor").value = await api.bundleDescription(select.value);
  };
  select.dispatchEvent(new Event("change"));
  el("start-live").onclick = () => void startLivePlay(api);
  await refreshCatalogue(api);
}

if (typeof document !== "undefined" && document.getElementById("catalogue")) {
  void boot();
}
