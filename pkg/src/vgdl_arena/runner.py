"""Session driver: blocked curriculum, fixed-window protocol, retroactive
censoring, and the JSONL trace format.

A session owns one growing dialogue (context is never reset across episodes
or levels) and one trace. Episodes restart immediately on the same level
after a win or loss; under the blocked protocol the level advances only after
`consecutive_wins_to_advance` wins in a row, while the fixed-window protocol
advances unconditionally after a fixed number of steps on the level.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .core import GameBundle, validate_bundle
from .engine import Action, EpisodeResult, init_episode, state_hash, step
from .errors import (
    AgentAborted,
    BundleInvalid,
    CorruptTrace,
    GatewayError,
)
from .gateway import ACTION_ONLY, Agent, DialogueTurn, format_assistant_content
from .obs import assign_colors, render_observation, render_system_prompt
from .rng import derive_seed

SCHEMA_VERSION = 1

BLOCKED = "blocked"
FIXED_WINDOW = "fixed_window"


@dataclass
class RunConfig:
    protocol: str = BLOCKED
    consecutive_wins_to_advance: int = 2
    global_step_budget: int = 1600
    per_level_step_cap: int | None = None  # cap on each episode's length
    fixed_window_steps: int = 60
    seed: int = 0
    suggestion_level: str = "elaborate"
    max_history_turns: int | None = None  # oldest-turn truncation when set

    def __post_init__(self):
        if self.global_step_budget <= 0:
            raise ValueError("global_step_budget must be positive")
        if self.protocol == BLOCKED and self.consecutive_wins_to_advance < 1:
            raise ValueError("consecutive_wins_to_advance must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class StepRecord:
    level: int
    episode: int  # episode index within the level
    step: int  # step index within the episode
    observation: str
    action: str
    rationale: str | None
    reasoning_chars: int
    score_after: int
    status_after: str  # ongoing | won | lost | truncated
    digest: int


@dataclass
class LevelRecord:
    level: int
    episodes: list[EpisodeResult] = field(default_factory=list)
    censored: bool = False

    def mastered(self, k: int) -> bool:
        tail = self.episodes[-k:]
        return len(tail) == k and all(e.outcome == "won" for e in tail)

    @property
    def discovery_steps(self) -> int | None:
        total = 0
        for ep in self.episodes:
            total += ep.steps
            if ep.outcome == "won":
                return total
        return None

    @property
    def execution_steps(self) -> list[int]:
        wins = [ep.steps for ep in self.episodes if ep.outcome == "won"]
        return wins[1:]


@dataclass
class SessionTrace:
    header: dict
    steps: list[StepRecord] = field(default_factory=list)
    levels: list[LevelRecord] = field(default_factory=list)
    aborted: str | None = None

    @property
    def total_steps(self) -> int:
        return len(self.steps)

    def level_record(self, level: int) -> LevelRecord:
        for rec in self.levels:
            if rec.level == level:
                return rec
        rec = LevelRecord(level)
        self.levels.append(rec)
        return rec


def episode_seed(session_seed: int, level: int, episode: int) -> int:
    return derive_seed(session_seed, "ep", level, episode)


def run_session(
    bundle: GameBundle,
    cfg: RunConfig,
    agent: Agent,
    trace_path: str | Path | None = None,
    extra_header: dict | None = None,
) -> SessionTrace:
    """Drive one full session; returns the trace (also streamed to disk if
    `trace_path` is given). Gateway failures abort the session with
    AgentAborted after recording the abort in the trace."""
    diags = validate_bundle(bundle)
    if diags:
        raise BundleInvalid(f"{bundle.game_name}: {diags[0].message}")

    cmap = assign_colors(bundle.description, cfg.seed)
    system_prompt = render_system_prompt(cfg.suggestion_level, bundle.description, cmap)
    header = {
        "kind": "header",
        "schema_version": SCHEMA_VERSION,
        "game": bundle.game_name,
        "agent": agent.name,
        "rationale_mode": agent.rationale_mode,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "colors": dict(cmap.assignment),
        "created": time.time(),
    }
    if extra_header:
        header.update(extra_header)
    trace = SessionTrace(header=header)
    writer = _TraceWriter(trace_path)
    writer.write(header)

    history: list[DialogueTurn] = []
    last_trial: EpisodeResult | None = None
    global_steps = 0
    level = 0
    episode_idx = 0
    consecutive_wins = 0
    level_steps = 0  # steps spent on the current level (fixed-window clock)

    try:
        while level < len(bundle.levels) and global_steps < cfg.global_step_budget:
            state = init_episode(bundle, level, episode_seed(cfg.seed, level, episode_idx))
            ep_steps = 0
            outcome = None
            while True:
                obs = render_observation(state, cmap, last_trial if state.step_index == 0 else None)
                try:
                    reply = agent.act(system_prompt, history, obs)
                except GatewayError as exc:
                    trace.aborted = str(exc)
                    writer.write({"kind": "abort", "reason": str(exc)})
                    raise AgentAborted(str(exc)) from exc
                history.append(DialogueTurn("user", obs))
                history.append(
                    DialogueTurn(
                        "assistant",
                        format_assistant_content(reply.action, reply.rationale, agent.rationale_mode),
                        parsed_action=reply.action,
                        rationale=reply.rationale if agent.rationale_mode != ACTION_ONLY else None,
                    )
                )
                if cfg.max_history_turns is not None and len(history) > cfg.max_history_turns:
                    history = history[-cfg.max_history_turns:]
                    if history and history[0].role == "assistant":
                        history = history[1:]

                out = step(state, reply.action)
                ep_steps += 1
                global_steps += 1
                level_steps += 1

                status = out.episode_status
                budget_out = global_steps >= cfg.global_step_budget
                capped = cfg.per_level_step_cap is not None and ep_steps >= cfg.per_level_step_cap
                window_out = cfg.protocol == FIXED_WINDOW and level_steps >= cfg.fixed_window_steps
                if status == "ongoing" and (budget_out or capped or window_out):
                    status = "truncated"

                rec = StepRecord(
                    level=level,
                    episode=episode_idx,
                    step=state.step_index - 1,
                    observation=obs,
                    action=reply.action.value,
                    rationale=reply.rationale,
                    reasoning_chars=reply.reasoning_chars,
                    score_after=state.score,
                    status_after=status,
                    digest=state_hash(state),
                )
                trace.steps.append(rec)
                writer.write({"kind": "step", **dataclasses.asdict(rec)})

                if status != "ongoing":
                    outcome = status
                    break

            result = EpisodeResult(outcome=outcome, steps=ep_steps, final_score=state.score)
            trace.level_record(level).episodes.append(result)
            writer.write(
                {
                    "kind": "episode",
                    "level": level,
                    "episode": episode_idx,
                    "outcome": result.outcome,
                    "steps": result.steps,
                    "final_score": result.final_score,
                }
            )
            last_trial = result
            episode_idx += 1

            if cfg.protocol == BLOCKED:
                consecutive_wins = consecutive_wins + 1 if result.outcome == "won" else 0
                if consecutive_wins >= cfg.consecutive_wins_to_advance:
                    level += 1
                    episode_idx = 0
                    consecutive_wins = 0
                    level_steps = 0
            else:  # fixed window
                if level_steps >= cfg.fixed_window_steps:
                    level += 1
                    episode_idx = 0
                    level_steps = 0
    finally:
        writer.close()
    return trace


# ----------------------------------------------------------------------
# Censoring


def censor_trace(trace: SessionTrace, k: int = 2, budget: int | None = None) -> SessionTrace:
    """Retroactively impose the blocked-mastery criterion on a trace.

    Within each level, episodes past the point of k consecutive wins are
    dropped; all levels after the first level that never reaches mastery are
    censored entirely. Idempotent, and a no-op on conforming blocked traces.
    """
    new_levels: list[LevelRecord] = []
    kept: list[tuple[int, int]] = []  # (level, episode) pairs kept
    censor_rest = False
    budget_left = budget if budget is not None else trace.header.get("config", {}).get(
        "global_step_budget"
    )
    for rec in sorted(trace.levels, key=lambda r: r.level):
        if censor_rest:
            new_levels.append(LevelRecord(rec.level, [], censored=True))
            continue
        episodes = []
        streak = 0
        mastered = False
        for idx, ep in enumerate(rec.episodes):
            if budget_left is not None and budget_left <= 0:
                break
            take = ep
            if budget_left is not None and ep.steps > budget_left:
                take = EpisodeResult("truncated", budget_left, ep.final_score)
            episodes.append(take)
            kept.append((rec.level, idx))
            if budget_left is not None:
                budget_left -= take.steps
            streak = streak + 1 if take.outcome == "won" else 0
            if streak >= k:
                mastered = True
                break
        new_levels.append(LevelRecord(rec.level, episodes, censored=False))
        if not mastered:
            censor_rest = True
    kept_set = set(kept)
    new_steps = [s for s in trace.steps if (s.level, s.episode) in kept_set]
    header = dict(trace.header)
    header["censored"] = {"k": k, "budget": budget}
    return SessionTrace(header=header, steps=new_steps, levels=new_levels, aborted=trace.aborted)


# ----------------------------------------------------------------------
# Persistence


class _TraceWriter:
    """Append-only JSONL writer; flushes per line so crashes leave a prefix."""

    def __init__(self, path: str | Path | None):
        self.fh = open(path, "w", encoding="utf-8") if path else None

    def write(self, record: dict) -> None:
        if self.fh:
            self.fh.write(json.dumps(record) + "\n")
            self.fh.flush()

    def close(self) -> None:
        if self.fh:
            self.fh.close()


def trace_filename(agent: str, game: str, seed: int) -> str:
    return f"{agent}__{game}__seed{seed}.trace.jsonl"


def persist_trace(trace: SessionTrace, path: str | Path) -> None:
    writer = _TraceWriter(path)
    try:
        writer.write(trace.header)
        for rec in trace.steps:
            writer.write({"kind": "step", **dataclasses.asdict(rec)})
        for lrec in sorted(trace.levels, key=lambda r: r.level):
            for idx, ep in enumerate(lrec.episodes):
                writer.write(
                    {
                        "kind": "episode",
                        "level": lrec.level,
                        "episode": idx,
                        "outcome": ep.outcome,
                        "steps": ep.steps,
                        "final_score": ep.final_score,
                    }
                )
            if lrec.censored:
                writer.write({"kind": "censored_level", "level": lrec.level})
        if trace.aborted:
            writer.write({"kind": "abort", "reason": trace.aborted})
    finally:
        writer.close()


def load_trace(path: str | Path) -> SessionTrace:
    """Parse a trace file; raises CorruptTrace (with .partial) at the first
    bad line, everything before it being a valid prefix."""
    trace: SessionTrace | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                kind = record["kind"]
                if kind == "header":
                    if record.get("schema_version") != SCHEMA_VERSION:
                        raise ValueError(f"unsupported schema {record.get('schema_version')}")
                    trace = SessionTrace(header=record)
                elif trace is None:
                    raise ValueError("record before header")
                elif kind == "step":
                    fields = {k: v for k, v in record.items() if k != "kind"}
                    trace.steps.append(StepRecord(**fields))
                elif kind == "episode":
                    trace.level_record(record["level"]).episodes.append(
                        EpisodeResult(record["outcome"], record["steps"], record["final_score"])
                    )
                elif kind == "censored_level":
                    trace.level_record(record["level"]).censored = True
                elif kind == "abort":
                    trace.aborted = record["reason"]
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except (ValueError, KeyError, TypeError) as exc:
                err = CorruptTrace(str(exc), line_no)
                err.partial = trace
                raise err
    if trace is None:
        err = CorruptTrace("empty trace file", 1)
        err.partial = None
        raise err
    return trace


# ----------------------------------------------------------------------
# Replay verification


def replay_digests(bundle: GameBundle, trace: SessionTrace) -> list[int]:
    """Re-simulate a trace's action sequence, returning per-step digests."""
    digests = []
    seed = trace.header["seed"]
    by_episode: dict[tuple[int, int], list[StepRecord]] = {}
    for rec in trace.steps:
        by_episode.setdefault((rec.level, rec.episode), []).append(rec)
    for (level, episode), records in by_episode.items():
        state = init_episode(bundle, level, episode_seed(seed, level, episode))
        for rec in sorted(records, key=lambda r: r.step):
            step(state, Action(rec.action))
            digests.append(state_hash(state))
    return digests


def verify_trace(bundle: GameBundle, trace: SessionTrace) -> list[int]:
    """Returns indices of steps whose recorded digest does not replay."""
    recomputed = replay_digests(bundle, trace)
    return [i for i, (a, b) in enumerate(zip(trace.steps, recomputed)) if a.digest != b]
