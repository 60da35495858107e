"""Deterministic step semantics for parsed games.

Phase order within one step is fixed:

    1. avatar move / use
    2. NPC and missile moves, in sprite-instance creation order
    3. spawn points
    4. pairwise interaction resolution, in rule-declaration order (one pass)
    5. termination checks, in rule-declaration order (first match wins)

Stochastic classes (RandomNPC, SpawnPoint) consume exactly one RNG draw per
move/spawn opportunity; nothing else touches the RNG, so games without those
classes behave identically under every seed.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from .core import (
    EOS,
    WALL,
    EffectKind,
    GameBundle,
    SpriteClass,
    TerminationKind,
    validate_bundle,
)
from .errors import BundleInvalid, EpisodeAlreadyTerminated, InvalidLevelIndex
from .rng import Rng, derive_seed


class Action(enum.Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    ACTION = "action"
    WAIT = "wait"


ACTION_TOKENS = [a.value for a in Action]

# (dx, dy) with x = column, y = row, origin top-left.
DELTAS = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}

# Chaser/Fleer tie-break priority; "stay" is the last resort candidate.
MOVE_PRIORITY = [(0, -1), (0, 1), (-1, 0), (1, 0), (0, 0)]


@dataclass
class SpriteInstance:
    sid: int
    stype: str
    x: int
    y: int
    alive: bool = True
    orient: tuple[int, int] = (0, -1)
    ttl: int | None = None
    ticks: int = 0
    spawned_total: int = 0


@dataclass
class EpisodeResult:
    outcome: str  # "won" | "lost" | "truncated"
    steps: int
    final_score: int


@dataclass
class StepOutcome:
    state: "WorldState"
    episode_status: str  # "ongoing" | "won" | "lost"
    events: list[tuple[int, int, int]]  # (rule index, actor sid, patient sid)


@dataclass
class WorldState:
    bundle: GameBundle
    level: int
    width: int
    height: int
    sprites: list[SpriteInstance]
    inventory: dict[str, int]
    score: int
    step_index: int
    rng: Rng
    status: str = "ongoing"
    _next_sid: int = 0

    # ------------------------------------------------------------------
    def clone(self) -> "WorldState":
        """Deep copy for search and replay; the bundle is shared (immutable)."""
        other = WorldState(
            bundle=self.bundle,
            level=self.level,
            width=self.width,
            height=self.height,
            sprites=[
                SpriteInstance(s.sid, s.stype, s.x, s.y, s.alive, s.orient, s.ttl, s.ticks, s.spawned_total)
                for s in self.sprites
            ],
            inventory=dict(self.inventory),
            score=self.score,
            step_index=self.step_index,
            rng=self.rng.clone(),
            status=self.status,
            _next_sid=self._next_sid,
        )
        return other

    def live(self) -> list[SpriteInstance]:
        return [s for s in self.sprites if s.alive]

    def live_of(self, stype: str) -> list[SpriteInstance]:
        return [s for s in self.sprites if s.alive and s.stype == stype]

    def avatar(self) -> SpriteInstance | None:
        name = self.bundle.description.avatar_def.name
        for s in self.sprites:
            if s.alive and s.stype == name:
                return s
        return None

    def in_grid(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def wall_at(self, x: int, y: int) -> bool:
        return any(s.alive and s.stype == WALL and s.x == x and s.y == y for s in self.sprites)

    def spawn(self, stype: str, x: int, y: int, orient: tuple[int, int] | None = None) -> SpriteInstance:
        sd = None
        if stype != WALL:
            sd = self.bundle.description.sprite(stype)
        inst = SpriteInstance(self._next_sid, stype, x, y)
        if sd is not None:
            inst.ttl = sd.params.get("ttl")
            d = sd.params.get("direction")
            if d is not None:
                inst.orient = DELTAS[Action(d)]
        if orient is not None:
            inst.orient = orient
        self._next_sid += 1
        self.sprites.append(inst)
        return inst


def init_episode(bundle: GameBundle, level: int, seed: int) -> WorldState:
    """Instantiate a level; RNG is seeded from (seed, game_name, level)."""
    diags = validate_bundle(bundle)
    if diags:
        raise BundleInvalid(f"{bundle.game_name}: {diags[0].message}")
    if not 0 <= level < len(bundle.levels):
        raise InvalidLevelIndex(f"level {level} out of range")
    layout = bundle.levels[level]
    state = WorldState(
        bundle=bundle,
        level=level,
        width=layout.width,
        height=layout.height,
        sprites=[],
        inventory={},
        score=0,
        step_index=0,
        rng=Rng(derive_seed(seed, bundle.game_name, level)),
    )
    mapping = bundle.description.level_mapping
    for y, row in enumerate(layout.rows):
        for x, char in enumerate(row):
            if char == " ":
                continue
            for stype in mapping[char]:
                state.spawn(stype, x, y)
    return state


# ----------------------------------------------------------------------
# Movement helpers


def _stepback_rules(state: WorldState, stype: str) -> set[str]:
    """Patient types that block movement of `stype` (declared stepBack rules)."""
    return {
        r.patient
        for r in state.bundle.description.interactions
        if r.actor == stype and r.effect is EffectKind.STEP_BACK
    }


def _blocked_for(state: WorldState, inst: SpriteInstance, x: int, y: int) -> bool:
    if not state.in_grid(x, y) or state.wall_at(x, y):
        return True
    blockers = _stepback_rules(state, inst.stype)
    return any(s.alive and s is not inst and s.stype in blockers and s.x == x and s.y == y for s in state.sprites)


def _eos_kill_rule(state: WorldState, stype: str) -> int | None:
    for idx, r in enumerate(state.bundle.description.interactions):
        if r.actor == stype and r.patient == EOS and r.effect in (EffectKind.KILL_SPRITE, EffectKind.KILL_BOTH):
            return idx
    return None


def _nearest(state: WorldState, inst: SpriteInstance, target_type: str) -> SpriteInstance | None:
    best = None
    best_key = None
    for s in state.sprites:
        if s.alive and s.stype == target_type:
            key = (abs(s.x - inst.x) + abs(s.y - inst.y), s.sid)
            if best_key is None or key < best_key:
                best, best_key = s, key
    return best


def _move_npc(state: WorldState, inst: SpriteInstance, record_event) -> None:
    sd = state.bundle.description.sprite(inst.stype)
    klass = sd.klass
    cooldown = sd.params.get("cooldown", 1)
    inst.ticks += 1
    if inst.ticks % cooldown != 0:
        return

    if klass is SpriteClass.MISSILE:
        speed = sd.params.get("speed", 1)
        for _ in range(max(speed, 0)):
            nx, ny = inst.x + inst.orient[0], inst.y + inst.orient[1]
            if not state.in_grid(nx, ny):
                ridx = _eos_kill_rule(state, inst.stype)
                if ridx is not None:
                    inst.alive = False
                    record_event(ridx, inst.sid, -1)
                return
            if _blocked_for(state, inst, nx, ny):
                return
            inst.x, inst.y = nx, ny
    elif klass is SpriteClass.RANDOM_NPC:
        # exactly one draw per move opportunity, even when the move is blocked
        d = MOVE_PRIORITY[state.rng.randrange(4)]
        nx, ny = inst.x + d[0], inst.y + d[1]
        if not _blocked_for(state, inst, nx, ny):
            inst.x, inst.y = nx, ny
            inst.orient = d
    elif klass in (SpriteClass.CHASER, SpriteClass.FLEER):
        target = _nearest(state, inst, sd.params["target"])
        if target is None:
            return
        best_d = None
        best_dist = None
        for d in MOVE_PRIORITY:
            nx, ny = inst.x + d[0], inst.y + d[1]
            if d != (0, 0) and _blocked_for(state, inst, nx, ny):
                continue
            dist = abs(target.x - nx) + abs(target.y - ny)
            better = (
                best_dist is None
                or (klass is SpriteClass.CHASER and dist < best_dist)
                or (klass is SpriteClass.FLEER and dist > best_dist)
            )
            if better:
                best_d, best_dist = d, dist
        if best_d is not None and best_d != (0, 0):
            inst.x, inst.y = inst.x + best_d[0], inst.y + best_d[1]
            inst.orient = best_d
    elif klass is SpriteClass.PATH_WALKER:
        nx, ny = inst.x + inst.orient[0], inst.y + inst.orient[1]
        if _blocked_for(state, inst, nx, ny):
            inst.orient = (-inst.orient[0], -inst.orient[1])
        else:
            inst.x, inst.y = nx, ny


def _spawn_phase(state: WorldState, inst: SpriteInstance) -> None:
    sd = state.bundle.description.sprite(inst.stype)
    total = sd.params.get("total")
    if total is not None and inst.spawned_total >= total:
        inst.alive = False
        return
    cooldown = sd.params.get("cooldown", 1)
    inst.ticks += 1
    if inst.ticks % cooldown != 0:
        return
    rate = sd.params.get("rate", 1.0)
    draw = state.rng.random()
    if draw < rate:
        state.spawn(sd.params["stype"], inst.x, inst.y)
        inst.spawned_total += 1


# ----------------------------------------------------------------------


def step(state: WorldState, act: Action) -> StepOutcome:
    """Advance one step; mutates and returns `state` inside a StepOutcome."""
    if state.status != "ongoing":
        raise EpisodeAlreadyTerminated(f"episode already {state.status}")
    desc = state.bundle.description
    events: list[tuple[int, int, int]] = []

    def record_event(rule_idx: int, actor_sid: int, patient_sid: int) -> None:
        events.append((rule_idx, actor_sid, patient_sid))
        state.score += desc.interactions[rule_idx].score_delta

    # positions at step start, for stepBack / spawnBehind / push direction
    prev = {s.sid: (s.x, s.y) for s in state.sprites if s.alive}

    # expire short-lived sprites (e.g. sword flashes from the previous step)
    for s in state.sprites:
        if s.alive and s.ttl is not None:
            s.ttl -= 1
            if s.ttl <= 0:
                s.alive = False

    # phase 1: avatar
    avatar = state.avatar()
    if avatar is not None:
        if act in DELTAS:
            d = DELTAS[act]
            avatar.orient = d
            nx, ny = avatar.x + d[0], avatar.y + d[1]
            if state.in_grid(nx, ny) and not state.wall_at(nx, ny):
                avatar.x, avatar.y = nx, ny
        elif act is Action.ACTION:
            sd = desc.avatar_def
            if sd.klass is SpriteClass.SHOOT_AVATAR:
                nx, ny = avatar.x + avatar.orient[0], avatar.y + avatar.orient[1]
                if state.in_grid(nx, ny) and not state.wall_at(nx, ny):
                    state.spawn(sd.params["stype"], nx, ny, orient=avatar.orient)

    # phase 2: NPC / missile moves (snapshot: sprites spawned during the
    # phase move for the first time next step)
    movers = [
        s
        for s in list(state.sprites)
        if s.alive
        and s.stype != WALL
        and s is not avatar
        and s.stype != desc.avatar_def.name
        and desc.sprite(s.stype).klass
        in (
            SpriteClass.MISSILE,
            SpriteClass.RANDOM_NPC,
            SpriteClass.CHASER,
            SpriteClass.FLEER,
            SpriteClass.PATH_WALKER,
        )
    ]
    for inst in movers:
        if inst.alive:
            _move_npc(state, inst, record_event)

    # phase 3: spawn points
    for inst in list(state.sprites):
        if inst.alive and inst.stype != WALL and desc.sprite(inst.stype).klass is SpriteClass.SPAWN_POINT:
            _spawn_phase(state, inst)

    # phase 4: interactions, one ordered pass
    for ridx, rule in enumerate(desc.interactions):
        if rule.patient == EOS:
            continue  # handled during movement
        actors = [s for s in state.sprites if s.alive and s.stype == rule.actor]
        for actor_inst in actors:
            if not actor_inst.alive:
                continue
            patients = [
                s
                for s in state.sprites
                if s.alive
                and s is not actor_inst
                and s.stype == rule.patient
                and s.x == actor_inst.x
                and s.y == actor_inst.y
            ]
            for patient_inst in patients:
                if not actor_inst.alive or not patient_inst.alive:
                    continue
                applied = _apply_effect(state, rule, ridx, actor_inst, patient_inst, prev)
                if applied:
                    record_event(ridx, actor_inst.sid, patient_inst.sid)

    state.step_index += 1

    # phase 5: terminations, first match wins
    for term in desc.terminations:
        if term.kind is TerminationKind.TIMEOUT:
            matched = state.step_index >= term.steps
        else:
            count = sum(1 for s in state.sprites if s.alive and s.stype in term.types)
            matched = count == term.limit
        if matched:
            state.status = "won" if term.outcome == "win" else "lost"
            break

    return StepOutcome(state, state.status, events)


def _apply_effect(state, rule, ridx, actor, patient, prev) -> bool:
    kind = rule.effect
    desc = state.bundle.description
    if kind is EffectKind.KILL_SPRITE:
        actor.alive = False
    elif kind is EffectKind.KILL_BOTH:
        actor.alive = False
        patient.alive = False
    elif kind is EffectKind.TRANSFORM_TO:
        actor.stype = rule.params["stype"]
        actor.ttl = desc.sprite(actor.stype).params.get("ttl")
        actor.ticks = 0
    elif kind is EffectKind.STEP_BACK:
        px, py = prev.get(actor.sid, (actor.x, actor.y))
        actor.x, actor.y = px, py
        if actor.stype != WALL and desc.sprite(actor.stype).klass is SpriteClass.PATH_WALKER:
            actor.orient = (-actor.orient[0], -actor.orient[1])
    elif kind is EffectKind.BOUNCE_FORWARD:
        ppx, ppy = prev.get(patient.sid, (patient.x, patient.y))
        dx, dy = patient.x - ppx, patient.y - ppy
        if dx == 0 and dy == 0:
            return False
        nx, ny = actor.x + dx, actor.y + dy
        if _push_blocked(state, actor, nx, ny):
            # blocked push: box stays, pusher returns to its previous cell
            patient.x, patient.y = ppx, ppy
        else:
            actor.x, actor.y = nx, ny
    elif kind is EffectKind.COLLECT_RESOURCE:
        actor.alive = False
        if patient.stype == desc.avatar_def.name:
            state.inventory[actor.stype] = state.inventory.get(actor.stype, 0) + 1
    elif kind is EffectKind.KILL_IF_OTHER_HAS_MORE:
        if patient.stype != desc.avatar_def.name:
            return False
        if state.inventory.get(rule.params["resource"], 0) < rule.params.get("limit", 1):
            return False
        actor.alive = False
    elif kind is EffectKind.SPAWN_BEHIND:
        px, py = prev.get(patient.sid, (patient.x, patient.y))
        state.spawn(rule.params["stype"], px, py)
    elif kind is EffectKind.SCORE_CHANGE:
        pass
    return True


def _push_blocked(state: WorldState, box: SpriteInstance, x: int, y: int) -> bool:
    """Single-box push: blocked by the edge, walls, declared blockers, and other pushables."""
    if not state.in_grid(x, y) or state.wall_at(x, y):
        return True
    desc = state.bundle.description
    blockers = _stepback_rules(state, box.stype)
    for s in state.sprites:
        if not s.alive or s is box or s.x != x or s.y != y:
            continue
        if s.stype in blockers:
            return True
        if s.stype != WALL and desc.sprite(s.stype).klass is SpriteClass.PASSIVE:
            return True
    return False


def state_hash(state: WorldState) -> int:
    """64-bit digest, stable across processes and platforms."""
    parts = [str(state.width), str(state.height)]
    for s in sorted(state.sprites, key=lambda s: s.sid):
        if s.alive:
            parts.append(f"{s.sid},{s.stype},{s.x},{s.y},{s.orient[0]},{s.orient[1]}")
    parts.append(repr(sorted(state.inventory.items())))
    parts.append(str(state.score))
    parts.append(str(state.step_index))
    parts.append(str(state.rng.state))
    parts.append(state.status)
    digest = hashlib.blake2b("|".join(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")
