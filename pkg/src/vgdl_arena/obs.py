"""Anonymized textual observations and the three system prompts.

The observation template is byte-exact (``\\n`` line endings):

    STEP <n> | SCORE <s>
    GRID <w> x <h>
    OBJECTS:
      <COLOR> at (x,y) [(x,y) ...]
      ...
    INVENTORY: <COLOR> x<k> [...] | (empty)
    [LAST TRIAL: <won|lost> (score <s>)]
    ACTIONS: up, down, left, right, action, wait

Coordinates are (x=column, y=row), origin top-left. Colors are listed in
fixed palette order; positions row-major. Wall positions are run-length
compressed per row as ``(x1-x2,y)`` to bound prompt size. The avatar's color
is never designated; agents must infer which object they control.
"""

from __future__ import annotations

import re

from .core import WALL, GameDescription, pretty_print
from .engine import ACTION_TOKENS, EpisodeResult, WorldState
from .errors import PaletteExhausted
from .rng import Rng, derive_seed

PALETTE = [
    "DARKBLUE",
    "GREEN",
    "ORANGE",
    "GOLD",
    "RED",
    "PURPLE",
    "BROWN",
    "PINK",
    "LIGHTBLUE",
    "GRAY",
    "YELLOW",
    "WHITE",
]

PROMPT_VERSION = "1"


class ColorMap:
    """Session-scoped bijection from sprite-type name to color token."""

    def __init__(self, assignment: dict[str, str]):
        values = list(assignment.values())
        assert len(set(values)) == len(values), "color assignment must be injective"
        self.assignment = dict(assignment)

    def color(self, stype: str) -> str:
        return self.assignment[stype]

    def types_in_palette_order(self) -> list[str]:
        by_color = {c: t for t, c in self.assignment.items()}
        return [by_color[c] for c in PALETTE if c in by_color]


def assign_colors(description: GameDescription, session_seed: int) -> ColorMap:
    """Deterministic per-session color permutation over all renderable types."""
    types = description.type_names
    if any(WALL in names for names in description.level_mapping.values()):
        types = types + [WALL]
    if len(types) > len(PALETTE):
        raise PaletteExhausted(f"{len(types)} sprite types exceed palette of {len(PALETTE)}")
    colors = list(PALETTE)
    rng = Rng(derive_seed(session_seed, "colors"))
    for i in range(len(colors) - 1, 0, -1):  # Fisher-Yates
        j = rng.randrange(i + 1)
        colors[i], colors[j] = colors[j], colors[i]
    return ColorMap({t: colors[i] for i, t in enumerate(types)})


def _wall_runs(cells: list[tuple[int, int]]) -> list[str]:
    """Row-major cells -> per-row horizontal runs `(x1-x2,y)`, singletons `(x,y)`."""
    out = []
    i = 0
    while i < len(cells):
        x0, y = cells[i]
        x1 = x0
        while i + 1 < len(cells) and cells[i + 1] == (x1 + 1, y):
            x1 += 1
            i += 1
        out.append(f"({x0},{y})" if x0 == x1 else f"({x0}-{x1},{y})")
        i += 1
    return out


def render_observation(
    state: WorldState, cmap: ColorMap, last_trial: EpisodeResult | None = None
) -> str:
    lines = [
        f"STEP {state.step_index} | SCORE {state.score}",
        f"GRID {state.width} x {state.height}",
        "OBJECTS:",
    ]
    for stype in cmap.types_in_palette_order():
        cells = sorted(((s.x, s.y) for s in state.sprites if s.alive and s.stype == stype),
                       key=lambda p: (p[1], p[0]))
        if not cells:
            continue
        if stype == WALL:
            positions = _wall_runs(cells)
        else:
            positions = [f"({x},{y})" for x, y in cells]
        lines.append(f"  {cmap.color(stype)} at {' '.join(positions)}")
    inv_parts = [
        f"{cmap.color(t)} x{state.inventory[t]}"
        for t in cmap.types_in_palette_order()
        if state.inventory.get(t, 0) > 0
    ]
    lines.append(f"INVENTORY: {' '.join(inv_parts) if inv_parts else '(empty)'}")
    if state.step_index == 0 and last_trial is not None:
        outcome = "won" if last_trial.outcome == "won" else "lost"
        lines.append(f"LAST TRIAL: {outcome} (score {last_trial.final_score})")
    lines.append(f"ACTIONS: {', '.join(ACTION_TOKENS)}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# System prompts

_MINIMAL = """You are playing a grid-based game.
Each turn you receive the current game state as text and must choose exactly one action.
Available actions: {actions}.
Reply with a JSON object: {{"rationale": "<optional thoughts>", "action": "<one of the actions>"}}.
The "action" field is required.
"""

_PRIMER = """The game is a 2D grid world. Objects are shown as colors with (x,y) positions \
(x is the column, y is the row, (0,0) is the top-left corner).
One of the colored objects is under your control; you must discover which one by acting \
and observing what moves. Moving into some objects may block you, kill you, push them, \
collect them into your inventory, or transform them; these rules differ per game and \
must be discovered by experimentation. The "action" button may have a game-specific \
use. Winning and losing conditions are hidden; the LAST TRIAL line tells you how your \
previous attempt ended. Scores reward progress. Form hypotheses about the rules, test \
them, and revise them when outcomes surprise you.
"""

_ORACLE_HEADER = """The ground-truth rules of this game, with object types written as their colors:
"""


def anonymize_rules(description: GameDescription, cmap: ColorMap) -> str:
    """Pretty-printed rules with every internal type name replaced by its color."""
    text = pretty_print(description)
    names = sorted(cmap.assignment, key=len, reverse=True)
    pattern = re.compile(r"\b(" + "|".join(re.escape(n) for n in names) + r")\b")
    return pattern.sub(lambda m: cmap.assignment[m.group(1)], text)


def render_system_prompt(
    level: str, description: GameDescription | None = None, cmap: ColorMap | None = None
) -> str:
    """level is one of 'minimal' | 'elaborate' | 'oracle' (template version {v})."""
    base = _MINIMAL.format(actions=", ".join(ACTION_TOKENS))
    if level == "minimal":
        return base
    if level == "elaborate":
        return base + "\n" + _PRIMER
    if level == "oracle":
        if description is None or cmap is None:
            raise ValueError("oracle prompt requires description and color map")
        return base + "\n" + _PRIMER + "\n" + _ORACLE_HEADER + anonymize_rules(description, cmap)
    raise ValueError(f"unknown suggestion level {level!r}")
