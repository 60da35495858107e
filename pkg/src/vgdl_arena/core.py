"""Game-description data model, parser, and bundle validation.

The description format is line-oriented, one statement per line, ``#`` starts
a comment.  Four statement kinds:

    sprite <name> > <Class> [key=value ...]
    map <char> > <name> [name ...]
    interact <actor> <patient> > <effect> [key=value ...] [score=<int>]
    terminate > <SpriteCounter|MultiSpriteCounter|Timeout> [key=value ...] <win|lose>

``wall`` and ``EOS`` (the screen boundary) are reserved, implicitly defined
sprite types: every game gets obstruction semantics without declaring them.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateMappingChar,
    DuplicateTypeName,
    MalformedLine,
    MultipleAvatars,
    NoAvatar,
    RaggedGrid,
    UndefinedTypeReference,
    UnknownLayoutChar,
    UnknownSpriteClass,
)

WALL = "wall"
EOS = "EOS"
RESERVED_TYPES = (WALL, EOS)


class SpriteClass(enum.Enum):
    IMMOVABLE = "Immovable"
    PASSIVE = "Passive"
    MOVING_AVATAR = "MovingAvatar"
    SHOOT_AVATAR = "ShootAvatar"
    RANDOM_NPC = "RandomNPC"
    CHASER = "Chaser"
    FLEER = "Fleer"
    PATH_WALKER = "PathWalker"
    SPAWN_POINT = "SpawnPoint"
    MISSILE = "Missile"
    RESOURCE = "Resource"


AVATAR_CLASSES = (SpriteClass.MOVING_AVATAR, SpriteClass.SHOOT_AVATAR)

# Classes that consume RNG draws when they move/spawn.
STOCHASTIC_CLASSES = (SpriteClass.RANDOM_NPC, SpriteClass.SPAWN_POINT)


class EffectKind(enum.Enum):
    KILL_SPRITE = "killSprite"
    KILL_BOTH = "killBoth"
    TRANSFORM_TO = "transformTo"
    STEP_BACK = "stepBack"
    BOUNCE_FORWARD = "bounceForward"
    COLLECT_RESOURCE = "collectResource"
    KILL_IF_OTHER_HAS_MORE = "killIfOtherHasMore"
    SPAWN_BEHIND = "spawnBehind"
    SCORE_CHANGE = "scoreChange"


class TerminationKind(enum.Enum):
    SPRITE_COUNTER = "SpriteCounter"
    MULTI_SPRITE_COUNTER = "MultiSpriteCounter"
    TIMEOUT = "Timeout"


# Parameter value parsers per key; unknown keys are rejected at parse time.
_INT_KEYS = {"speed", "cooldown", "ttl", "total", "limit", "steps", "score"}
_FLOAT_KEYS = {"rate"}
_STR_KEYS = {"stype", "target", "resource", "direction"}

DIRECTIONS = ("up", "down", "left", "right")


@dataclass
class SpriteDef:
    name: str
    klass: SpriteClass
    params: dict = field(default_factory=dict)

    @property
    def is_avatar(self) -> bool:
        return self.klass in AVATAR_CLASSES

    @property
    def is_stochastic(self) -> bool:
        return self.klass in STOCHASTIC_CLASSES


@dataclass
class InteractionRule:
    actor: str
    patient: str
    effect: EffectKind
    params: dict = field(default_factory=dict)
    score_delta: int = 0


@dataclass
class TerminationRule:
    kind: TerminationKind
    outcome: str  # "win" | "lose"
    types: tuple[str, ...] = ()
    limit: int = 0
    steps: int = 0


@dataclass
class GameDescription:
    sprite_defs: list[SpriteDef]
    interactions: list[InteractionRule]
    terminations: list[TerminationRule]
    level_mapping: dict[str, list[str]]

    def sprite(self, name: str) -> SpriteDef:
        for sd in self.sprite_defs:
            if sd.name == name:
                return sd
        raise KeyError(name)

    @property
    def avatar_def(self) -> SpriteDef:
        return next(sd for sd in self.sprite_defs if sd.is_avatar)

    @property
    def type_names(self) -> list[str]:
        return [sd.name for sd in self.sprite_defs]


@dataclass
class LevelLayout:
    width: int
    height: int
    rows: list[str]


@dataclass
class GameBundle:
    game_name: str
    description: GameDescription
    levels: list[LevelLayout]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    level: int = -1
    row: int = -1
    col: int = -1

    def sort_key(self):
        return (self.level, self.row, self.col)


def _parse_value(key: str, raw: str, line_no: int):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "types":
            return tuple(part for part in raw.split(",") if part)
        if key in _STR_KEYS or key == "type":
            return raw
    except ValueError:
        raise MalformedLine(f"bad value for {key}: {raw!r}", line_no)
    raise MalformedLine(f"unknown parameter {key!r}", line_no)


def _parse_kv(tokens: list[str], line_no: int) -> dict:
    params = {}
    for tok in tokens:
        if "=" not in tok:
            raise MalformedLine(f"expected key=value, got {tok!r}", line_no)
        key, raw = tok.split("=", 1)
        params[key] = _parse_value(key, raw, line_no)
    return params


_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def parse_game_description(text: str) -> GameDescription:
    """Parse game-description source into a validated :class:`GameDescription`."""
    sprite_defs: list[SpriteDef] = []
    interactions: list[InteractionRule] = []
    interaction_lines: list[int] = []
    terminations: list[TerminationRule] = []
    termination_lines: list[int] = []
    level_mapping: dict[str, list[str]] = {}
    mapping_lines: dict[str, int] = {}

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "sprite":
            if len(tokens) < 4 or tokens[2] != ">":
                raise MalformedLine("expected: sprite <name> > <Class> [key=value ...]", line_no)
            name = tokens[1]
            if not _NAME_RE.match(name) or name in RESERVED_TYPES:
                raise MalformedLine(f"bad sprite name {name!r}", line_no)
            try:
                klass = SpriteClass(tokens[3])
            except ValueError:
                raise UnknownSpriteClass(f"unknown sprite class {tokens[3]!r}", line_no)
            if any(sd.name == name for sd in sprite_defs):
                raise DuplicateTypeName(f"sprite type {name!r} defined twice", line_no)
            sprite_defs.append(SpriteDef(name, klass, _parse_kv(tokens[4:], line_no)))
        elif kind == "map":
            if len(tokens) < 4 or tokens[2] != ">":
                raise MalformedLine("expected: map <char> > <name> [name ...]", line_no)
            char = tokens[1]
            if len(char) != 1:
                raise MalformedLine(f"mapping char must be one character, got {char!r}", line_no)
            if char in level_mapping:
                raise DuplicateMappingChar(f"mapping char {char!r} defined twice", line_no)
            level_mapping[char] = list(tokens[3:])
            mapping_lines[char] = line_no
        elif kind == "interact":
            if len(tokens) < 5 or tokens[3] != ">":
                raise MalformedLine(
                    "expected: interact <actor> <patient> > <effect> [key=value ...]", line_no
                )
            try:
                effect = EffectKind(tokens[4])
            except ValueError:
                raise MalformedLine(f"unknown effect {tokens[4]!r}", line_no)
            params = _parse_kv(tokens[5:], line_no)
            score = params.pop("score", 0)
            interactions.append(InteractionRule(tokens[1], tokens[2], effect, params, score))
            interaction_lines.append(line_no)
        elif kind == "terminate":
            if len(tokens) < 3 or tokens[1] != ">":
                raise MalformedLine("expected: terminate > <Kind> [key=value ...] <win|lose>", line_no)
            try:
                tkind = TerminationKind(tokens[2])
            except ValueError:
                raise MalformedLine(f"unknown termination kind {tokens[2]!r}", line_no)
            outcome = tokens[-1]
            if outcome not in ("win", "lose"):
                raise MalformedLine("termination must end with win or lose", line_no)
            params = _parse_kv(tokens[3:-1], line_no)
            types: tuple[str, ...] = ()
            if tkind is TerminationKind.SPRITE_COUNTER:
                if "type" not in params:
                    raise MalformedLine("SpriteCounter requires type=", line_no)
                types = (params["type"],)
            elif tkind is TerminationKind.MULTI_SPRITE_COUNTER:
                if "types" not in params:
                    raise MalformedLine("MultiSpriteCounter requires types=", line_no)
                types = tuple(params["types"])
            else:
                if "steps" not in params:
                    raise MalformedLine("Timeout requires steps=", line_no)
            limit = params.get("limit", 0)
            steps = params.get("steps", 0)
            if limit < 0 or steps < 0:
                raise MalformedLine("limit/steps must be nonnegative", line_no)
            terminations.append(TerminationRule(tkind, outcome, types, limit, steps))
            termination_lines.append(line_no)
        else:
            raise MalformedLine(f"unknown statement {kind!r}", line_no)

    desc = GameDescription(sprite_defs, interactions, terminations, level_mapping)
    _validate_description(desc, interaction_lines, termination_lines, mapping_lines)
    return desc


def _known(desc: GameDescription, name: str) -> bool:
    return name in RESERVED_TYPES or any(sd.name == name for sd in desc.sprite_defs)


def _validate_description(
    desc: GameDescription,
    interaction_lines: list[int],
    termination_lines: list[int],
    mapping_lines: dict[str, int],
) -> None:
    avatars = [sd for sd in desc.sprite_defs if sd.is_avatar]
    if not avatars:
        raise NoAvatar("no avatar-class sprite defined")
    if len(avatars) > 1:
        raise MultipleAvatars("more than one avatar-class sprite defined")

    for sd in desc.sprite_defs:
        if sd.klass in (SpriteClass.CHASER, SpriteClass.FLEER):
            target = sd.params.get("target")
            if target is None or not _known(desc, target):
                raise UndefinedTypeReference(str(target), f"sprite {sd.name}")
        if sd.klass is SpriteClass.SPAWN_POINT:
            stype = sd.params.get("stype")
            if stype is None or not _known(desc, stype):
                raise UndefinedTypeReference(str(stype), f"sprite {sd.name}")
            rate = sd.params.get("rate", 1.0)
            if not 0.0 <= rate <= 1.0:
                raise MalformedLine(f"SpawnPoint rate must be in [0,1], got {rate}")
        if sd.klass is SpriteClass.SHOOT_AVATAR:
            stype = sd.params.get("stype")
            if stype is None or not _known(desc, stype):
                raise UndefinedTypeReference(str(stype), f"sprite {sd.name}")
        speed = sd.params.get("speed")
        if speed is not None and speed < 0:
            raise MalformedLine(f"speed must be nonnegative, got {speed}")
        cooldown = sd.params.get("cooldown")
        if cooldown is not None and cooldown < 1:
            raise MalformedLine(f"cooldown must be a positive integer, got {cooldown}")

    for rule, line_no in zip(desc.interactions, interaction_lines):
        for role, name in (("actor", rule.actor), ("patient", rule.patient)):
            if not _known(desc, name):
                raise UndefinedTypeReference(name, f"interaction {role}", line_no)
        if rule.effect in (EffectKind.TRANSFORM_TO, EffectKind.SPAWN_BEHIND):
            stype = rule.params.get("stype")
            if stype is None or not _known(desc, stype):
                raise UndefinedTypeReference(str(stype), "interaction effect", line_no)
        if rule.effect is EffectKind.KILL_IF_OTHER_HAS_MORE:
            resource = rule.params.get("resource")
            if resource is None or not _known(desc, resource):
                raise UndefinedTypeReference(str(resource), "interaction effect", line_no)
            if rule.params.get("limit", 0) < 0:
                raise MalformedLine("killIfOtherHasMore limit must be nonnegative", line_no)

    for rule, line_no in zip(desc.terminations, termination_lines):
        for name in rule.types:
            if not _known(desc, name):
                raise UndefinedTypeReference(name, "termination", line_no)
    outcomes = {t.outcome for t in desc.terminations}
    if "win" not in outcomes or "lose" not in outcomes:
        raise MalformedLine("game needs at least one win rule and one lose rule")

    for char, names in desc.level_mapping.items():
        for name in names:
            if not _known(desc, name):
                raise UndefinedTypeReference(name, f"map {char!r}", mapping_lines.get(char))


def pretty_print(desc: GameDescription) -> str:
    """Render a description back to source text; re-parsing yields an equal value."""
    lines = []
    for sd in desc.sprite_defs:
        parts = [f"sprite {sd.name} > {sd.klass.value}"]
        parts += [f"{k}={_fmt_value(v)}" for k, v in sd.params.items()]
        lines.append(" ".join(parts))
    for char, names in desc.level_mapping.items():
        lines.append(f"map {char} > {' '.join(names)}")
    for rule in desc.interactions:
        parts = [f"interact {rule.actor} {rule.patient} > {rule.effect.value}"]
        parts += [f"{k}={_fmt_value(v)}" for k, v in rule.params.items()]
        if rule.score_delta:
            parts.append(f"score={rule.score_delta}")
        lines.append(" ".join(parts))
    for term in desc.terminations:
        parts = [f"terminate > {term.kind.value}"]
        if term.kind is TerminationKind.SPRITE_COUNTER:
            parts.append(f"type={term.types[0]}")
            parts.append(f"limit={term.limit}")
        elif term.kind is TerminationKind.MULTI_SPRITE_COUNTER:
            parts.append(f"types={','.join(term.types)}")
            parts.append(f"limit={term.limit}")
        else:
            parts.append(f"steps={term.steps}")
        parts.append(term.outcome)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_level_layout(text: str, mapping: dict[str, list[str]], avatar_name: str | None = None) -> LevelLayout:
    """Parse a layout grid, checking rectangularity and mapped characters.

    ``avatar_name`` enables the exactly-one-avatar check; pass the game's
    avatar type name (callers going through a description always do).
    """
    rows = [line for line in text.splitlines()]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise RaggedGrid("empty layout")
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise RaggedGrid(f"row {r} has length {len(row)}, expected {width}", r + 1)
    avatar_cells = 0
    for r, row in enumerate(rows):
        for c, char in enumerate(row):
            if char == " ":
                continue
            if char not in mapping:
                raise UnknownLayoutChar(char, r, c)
            if avatar_name is not None and avatar_name in mapping[char]:
                avatar_cells += 1
    if avatar_name is not None:
        if avatar_cells == 0:
            raise NoAvatar("layout contains no avatar cell")
        if avatar_cells > 1:
            raise MultipleAvatars(f"layout contains {avatar_cells} avatar cells")
    return LevelLayout(width, len(rows), rows)


LEVELS_PER_GAME = 9


def validate_bundle(bundle: GameBundle) -> list[Diagnostic]:
    """Cross-check a bundle; returns diagnostics instead of raising."""
    diags: list[Diagnostic] = []
    if len(bundle.levels) != LEVELS_PER_GAME:
        diags.append(
            Diagnostic("WrongLevelCount", f"expected {LEVELS_PER_GAME} levels, got {len(bundle.levels)}")
        )
    desc = bundle.description
    avatar = desc.avatar_def.name
    for idx, layout in enumerate(bundle.levels):
        avatar_cells = 0
        for r, row in enumerate(layout.rows):
            if len(row) != layout.width:
                diags.append(Diagnostic("RaggedGrid", f"row {r} width mismatch", idx, r, 0))
                continue
            for c, char in enumerate(row):
                if char == " ":
                    continue
                if char not in desc.level_mapping:
                    diags.append(
                        Diagnostic("UnknownLayoutChar", f"char {char!r} unmapped", idx, r, c)
                    )
                elif avatar in desc.level_mapping[char]:
                    avatar_cells += 1
        if avatar_cells == 0:
            diags.append(Diagnostic("NoAvatar", "no avatar cell", idx))
        elif avatar_cells > 1:
            diags.append(Diagnostic("MultipleAvatars", f"{avatar_cells} avatar cells", idx))
    diags.sort(key=Diagnostic.sort_key)
    return diags


def load_bundle(path: str | Path) -> GameBundle:
    """Load ``game.vgdl`` + ``level_0.txt`` .. ``level_N.txt`` from a directory."""
    path = Path(path)
    desc = parse_game_description((path / "game.vgdl").read_text())
    avatar = desc.avatar_def.name
    levels = []
    for idx in range(len(sorted(path.glob("level_*.txt")))):
        text = (path / f"level_{idx}.txt").read_text()
        levels.append(parse_level_layout(text, desc.level_mapping, avatar))
    return GameBundle(path.name, desc, levels)


def bundled_games_dir() -> Path:
    return Path(__file__).parent / "assets" / "games"


def bundled_game_names() -> list[str]:
    return sorted(p.name for p in bundled_games_dir().iterdir() if p.is_dir())


def load_bundled_game(name: str) -> GameBundle:
    path = bundled_games_dir() / name
    if not path.is_dir():
        from .errors import UnknownBundle

        raise UnknownBundle(name)
    return load_bundle(path)
