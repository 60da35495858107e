"""HTTP/WebSocket front end: live play sessions, replay catalogue, and
frame reconstruction.

Replay frames are never stored; they are re-simulated on demand from the
trace's seed and action records, and every reconstructed step is checked
against the stored state digest so any engine nondeterminism surfaces as a
hard error instead of a silently wrong picture.
"""

from __future__ import annotations

import dataclasses
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    GameBundle,
    bundled_game_names,
    load_bundled_game,
    parse_game_description,
    parse_level_layout,
    pretty_print,
    validate_bundle,
)
from .engine import Action, EpisodeResult, WorldState, init_episode, state_hash, step
from .errors import (
    ArenaError,
    BundleInvalid,
    CorruptTrace,
    ParseError,
    StepOutOfRange,
    UnknownBundle,
    UnknownSession,
)
from .obs import ColorMap, assign_colors
from .runner import SessionTrace, StepRecord, episode_seed, load_trace, persist_trace
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel


class SessionRequest(BaseModel):
    bundle: str
    level: int = 0
    seed: int = 0
    description: str | None = None
    layout: str | None = None
    owner: str = "human"


class ActionRequest(BaseModel):
    action: str


@dataclass
class FrameView:
    width: int
    height: int
    cells: list[tuple[int, int, str]]  # (x, y, color token)
    score: int
    step: int
    status: str

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def frame_view(state: WorldState, cmap: ColorMap, status: str = "ongoing") -> FrameView:
    cells = [(s.x, s.y, cmap.color(s.stype)) for s in state.live()]
    return FrameView(
        width=state.width,
        height=state.height,
        cells=cells,
        score=state.score,
        step=state.step_index,
        status=status,
    )


@dataclass
class PlaySession:
    session_id: str
    bundle: GameBundle
    level: int
    seed: int
    state: WorldState
    cmap: ColorMap
    owner: str = "human"
    created: float = field(default_factory=time.time)
    last_active: float = field(default_factory=time.time)
    episode_idx: int = 0
    steps: list[StepRecord] = field(default_factory=list)
    episodes: list[EpisodeResult] = field(default_factory=list)
    ep_steps: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class ArenaService:
    """Session registry + replay store; the HTTP layer is a thin shim over
    these methods so they stay directly testable in-process."""

    def __init__(self, trace_dir: str | Path, idle_timeout: float = 3600.0):
        self.trace_dir = Path(trace_dir)
        self.trace_dir.mkdir(parents=True, exist_ok=True)
        self.idle_timeout = idle_timeout
        self.sessions: dict[str, PlaySession] = {}
        self._bundles: dict[str, GameBundle] = {}

    # -- bundles ---------------------------------------------------------

    def bundle_names(self) -> list[str]:
        return bundled_game_names()

    def get_bundle(self, name: str) -> GameBundle:
        if name not in self._bundles:
            self._bundles[name] = load_bundled_game(name)
        return self._bundles[name]

    def bundle_description(self, name: str) -> str:
        return pretty_print(self.get_bundle(name).description)

    # -- live sessions ---------------------------------------------------

    def create_session(
        self,
        bundle_id: str,
        level: int = 0,
        seed: int = 0,
        description_text: str | None = None,
        layout_text: str | None = None,
        owner: str = "human",
    ) -> PlaySession:
        """Edits, when given, are parsed fresh and stay session-local; the
        cached bundled assets are never touched."""
        base = self.get_bundle(bundle_id)
        bundle = base
        if description_text is not None or layout_text is not None:
            desc = (
                parse_game_description(description_text)
                if description_text is not None
                else base.description
            )
            levels = list(base.levels)
            if layout_text is not None:
                levels[level] = parse_level_layout(
                    layout_text, desc.level_mapping, desc.avatar_def.name
                )
            elif description_text is not None:
                levels = [
                    parse_level_layout("\n".join(lv.rows), desc.level_mapping, desc.avatar_def.name)
                    for lv in base.levels
                ]
            bundle = GameBundle(base.game_name, desc, levels)
            diags = validate_bundle(bundle)
            if diags:
                raise BundleInvalid("; ".join(d.message for d in diags))
        cmap = assign_colors(bundle.description, seed)
        state = init_episode(bundle, level, episode_seed(seed, level, 0))
        session = PlaySession(
            session_id=uuid.uuid4().hex,
            bundle=bundle,
            level=level,
            seed=seed,
            state=state,
            cmap=cmap,
            owner=owner,
        )
        self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> PlaySession:
        self._expire_idle()
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def post_action(self, session_id: str, action: Action) -> FrameView:
        """Apply one action in arrival order; a terminal step records the
        episode and the returned frame already shows the reset level."""
        session = self.get_session(session_id)
        with session.lock:
            session.last_active = time.time()
            out = step(session.state, action)
            session.ep_steps += 1
            session.steps.append(
                StepRecord(
                    level=session.level,
                    episode=session.episode_idx,
                    step=session.state.step_index - 1,
                    observation="",
                    action=action.value,
                    rationale=None,
                    reasoning_chars=0,
                    score_after=session.state.score,
                    status_after=out.episode_status,
                    digest=state_hash(session.state),
                )
            )
            status = out.episode_status
            if status != "ongoing":
                session.episodes.append(
                    EpisodeResult(status, session.ep_steps, session.state.score)
                )
                session.episode_idx += 1
                session.ep_steps = 0
                session.state = init_episode(
                    session.bundle,
                    session.level,
                    episode_seed(session.seed, session.level, session.episode_idx),
                )
            return frame_view(session.state, session.cmap, status)

    def session_frame(self, session_id: str) -> FrameView:
        session = self.get_session(session_id)
        return frame_view(session.state, session.cmap)

    def close_session(self, session_id: str) -> None:
        session = self.sessions.pop(session_id, None)
        if session is not None:
            self._persist_session(session)

    def _expire_idle(self) -> None:
        now = time.time()
        for sid in [
            sid
            for sid, s in self.sessions.items()
            if now - s.last_active > self.idle_timeout
        ]:
            self.close_session(sid)

    def _persist_session(self, session: PlaySession) -> None:
        if not session.steps:
            return
        trace = SessionTrace(
            header={
                "kind": "header",
                "schema_version": 1,
                "game": session.bundle.game_name,
                "agent": session.owner,
                "rationale_mode": "action_only",
                "config": {"protocol": "live", "seed": session.seed},
                "seed": session.seed,
                "colors": dict(session.cmap.assignment),
                "created": session.created,
            },
            steps=session.steps,
        )
        for ep in session.episodes:
            trace.level_record(session.level).episodes.append(ep)
        name = f"{session.owner}__{session.bundle.game_name}__seed{session.seed}.live-{session.session_id[:8]}.trace.jsonl"
        persist_trace(trace, self.trace_dir / name)

    # -- replays ---------------------------------------------------------

    def _trace_path(self, trace_id: str) -> Path:
        path = self.trace_dir / f"{trace_id}.trace.jsonl"
        if not path.is_file():
            raise UnknownSession(trace_id)
        return path

    def list_replays(self, game: str | None = None, agent: str | None = None) -> list[dict]:
        entries = []
        for path in sorted(self.trace_dir.glob("*.trace.jsonl")):
            try:
                trace = load_trace(path)
            except CorruptTrace:
                continue
            header = trace.header
            if game and header.get("game") != game:
                continue
            if agent and header.get("agent") != agent:
                continue
            outcomes = [ep.outcome for rec in trace.levels for ep in rec.episodes]
            entries.append(
                {
                    "trace_id": path.name[: -len(".trace.jsonl")],
                    "agent": header.get("agent"),
                    "game": header.get("game"),
                    "seed": header.get("seed"),
                    "steps": trace.total_steps,
                    "wins": outcomes.count("won"),
                    "losses": outcomes.count("lost"),
                    "aborted": trace.aborted is not None,
                }
            )
        return entries

    def get_replay(self, trace_id: str) -> SessionTrace:
        return load_trace(self._trace_path(trace_id))

    def replay_frame(self, trace_id: str, step_index: int) -> FrameView:
        """Re-simulate up to `step_index` (0 = initial frame of the first
        episode; k = after the k-th recorded action), digest-checked."""
        trace = self.get_replay(trace_id)
        if step_index < 0 or step_index > len(trace.steps):
            raise StepOutOfRange(f"step {step_index} outside 0..{len(trace.steps)}")
        bundle = self.get_bundle(trace.header["game"])
        cmap = ColorMap(trace.header["colors"])
        seed = trace.header["seed"]
        state = None
        key = None
        status = "ongoing"
        for rec in trace.steps[:step_index]:
            if (rec.level, rec.episode) != key:
                key = (rec.level, rec.episode)
                state = init_episode(bundle, rec.level, episode_seed(seed, rec.level, rec.episode))
            step(state, Action(rec.action))
            if state_hash(state) != rec.digest:
                raise CorruptTrace(
                    f"digest mismatch replaying step {rec.step} of level {rec.level}", 0
                )
            status = rec.status_after
        if state is None:
            first = trace.steps[0] if trace.steps else None
            level = first.level if first else 0
            episode = first.episode if first else 0
            state = init_episode(bundle, level, episode_seed(seed, level, episode))
        return frame_view(state, cmap, status)


# ----------------------------------------------------------------------
# FastAPI wiring


def create_app(trace_dir: str | Path, idle_timeout: float = 3600.0) -> FastAPI:
    service = ArenaService(trace_dir, idle_timeout)
    app = FastAPI(title="arena")
    app.state.service = service

    def _http_error(exc: ArenaError):
        if isinstance(exc, (UnknownBundle, UnknownSession)):
            return HTTPException(404, str(exc))
        if isinstance(exc, StepOutOfRange):
            return HTTPException(404, str(exc))
        if isinstance(exc, ParseError):
            return HTTPException(422, {"message": str(exc), "line": exc.line, "col": exc.col})
        if isinstance(exc, (BundleInvalid, CorruptTrace)):
            return HTTPException(422, str(exc))
        return HTTPException(400, str(exc))

    @app.get("/bundles")
    def bundles():
        return {"bundles": service.bundle_names()}

    @app.get("/bundles/{name}/description")
    def bundle_description(name: str):
        try:
            return {"name": name, "description": service.bundle_description(name)}
        except ArenaError as exc:
            raise _http_error(exc)

    @app.post("/sessions")
    def create_session(req: SessionRequest):
        try:
            session = service.create_session(
                req.bundle, req.level, req.seed, req.description, req.layout, req.owner
            )
        except ArenaError as exc:
            raise _http_error(exc)
        return {
            "session_id": session.session_id,
            "frame": frame_view(session.state, session.cmap).to_dict(),
        }

    @app.post("/sessions/{session_id}/action")
    def post_action(session_id: str, req: ActionRequest):
        try:
            action = Action(req.action)
        except ValueError:
            raise HTTPException(400, f"unknown action {req.action!r}")
        try:
            return {"frame": service.post_action(session_id, action).to_dict()}
        except ArenaError as exc:
            raise _http_error(exc)

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        service.close_session(session_id)
        return {"closed": session_id}

    @app.get("/replays")
    def replays(game: str | None = None, agent: str | None = None):
        return {"replays": service.list_replays(game=game, agent=agent)}

    @app.get("/replays/{trace_id}")
    def replay(trace_id: str):
        try:
            trace = service.get_replay(trace_id)
        except ArenaError as exc:
            raise _http_error(exc)
        return {
            "header": trace.header,
            "steps": [dataclasses.asdict(rec) for rec in trace.steps],
            "episodes": [
                {
                    "level": rec.level,
                    "episode": idx,
                    "outcome": ep.outcome,
                    "steps": ep.steps,
                    "final_score": ep.final_score,
                }
                for rec in sorted(trace.levels, key=lambda r: r.level)
                for idx, ep in enumerate(rec.episodes)
            ],
            "aborted": trace.aborted,
        }

    @app.get("/replays/{trace_id}/frame/{step_index}")
    def replay_frame(trace_id: str, step_index: int):
        try:
            return {"frame": service.replay_frame(trace_id, step_index).to_dict()}
        except ArenaError as exc:
            raise _http_error(exc)

    @app.websocket("/sessions/{session_id}/live")
    async def live(ws: WebSocket, session_id: str):
        await ws.accept()
        try:
            frame = service.session_frame(session_id)
        except ArenaError as exc:
            await ws.send_json({"error": str(exc)})
            await ws.close()
            return
        await ws.send_json({"frame": frame.to_dict()})
        try:
            while True:
                msg = await ws.receive_json()
                try:
                    action = Action(msg.get("action"))
                    frame = service.post_action(session_id, action)
                except (ValueError, ArenaError) as exc:
                    await ws.send_json({"error": str(exc)})
                    continue
                await ws.send_json({"frame": frame.to_dict()})
        except WebSocketDisconnect:
            pass

    return app
