"""Observation template (byte-exact), color assignment, and prompt tests."""

from __future__ import annotations

import pytest

from conftest import make_bundle
from vgdl_arena.core import parse_game_description
from vgdl_arena.engine import Action, EpisodeResult, init_episode, step
from vgdl_arena.errors import PaletteExhausted
from vgdl_arena.obs import (
    PALETTE,
    ColorMap,
    anonymize_rules,
    assign_colors,
    render_observation,
    render_system_prompt,
)

GAME = """
sprite avatar > MovingAvatar
sprite gem > Resource
sprite exit > Immovable
map a > avatar
map g > gem
map e > exit
map w > wall
interact gem avatar > collectResource score=1
interact exit avatar > killSprite score=5
terminate > SpriteCounter type=exit limit=0 win
terminate > Timeout steps=50 lose
"""

LEVEL = "wwwww\nwagew\nwwwww\n"


@pytest.fixture
def bundle():
    return make_bundle(GAME, LEVEL, "obsgame")


def fixed_cmap(bundle):
    types = bundle.description.type_names + ["wall"]
    return ColorMap({t: PALETTE[i] for i, t in enumerate(types)})


def test_observation_byte_exact(bundle):
    state = init_episode(bundle, 0, 0)
    cmap = fixed_cmap(bundle)  # avatar=DARKBLUE gem=GREEN exit=ORANGE wall=GOLD
    expected = (
        "STEP 0 | SCORE 0\n"
        "GRID 5 x 3\n"
        "OBJECTS:\n"
        "  DARKBLUE at (1,1)\n"
        "  GREEN at (2,1)\n"
        "  ORANGE at (3,1)\n"
        "  GOLD at (0-4,0) (0,1) (4,1) (0-4,2)\n"
        "INVENTORY: (empty)\n"
        "ACTIONS: up, down, left, right, action, wait\n"
    )
    assert render_observation(state, cmap) == expected


def test_observation_identical_for_identical_inputs(bundle):
    state = init_episode(bundle, 0, 0)
    cmap = fixed_cmap(bundle)
    assert render_observation(state, cmap) == render_observation(state.clone(), cmap)


def test_last_trial_line_only_at_step_zero(bundle):
    state = init_episode(bundle, 0, 0)
    cmap = fixed_cmap(bundle)
    last = EpisodeResult("won", 12, 5)
    obs0 = render_observation(state, cmap, last)
    assert "LAST TRIAL: won (score 5)\n" in obs0
    assert obs0.index("LAST TRIAL") < obs0.index("ACTIONS")
    step(state, Action.WAIT)
    assert "LAST TRIAL" not in render_observation(state, cmap, last)


def test_truncated_trial_renders_as_lost(bundle):
    state = init_episode(bundle, 0, 0)
    cmap = fixed_cmap(bundle)
    obs = render_observation(state, cmap, EpisodeResult("truncated", 40, -1))
    assert "LAST TRIAL: lost (score -1)\n" in obs


def test_inventory_rendering(bundle):
    state = init_episode(bundle, 0, 0)
    cmap = fixed_cmap(bundle)
    step(state, Action.RIGHT)  # collects the gem
    obs = render_observation(state, cmap)
    assert "INVENTORY: GREEN x1\n" in obs
    assert "GREEN at" not in obs  # collected: no longer on the grid


def test_colors_in_palette_order_not_type_order(bundle):
    # reversed assignment: listing must follow the palette, not definitions
    types = bundle.description.type_names + ["wall"]
    cmap = ColorMap({t: PALETTE[len(types) - 1 - i] for i, t in enumerate(types)})
    state = init_episode(bundle, 0, 0)
    lines = render_observation(state, cmap).splitlines()
    color_lines = [l.strip().split(" at ")[0] for l in lines if " at " in l]
    order = [PALETTE.index(c) for c in color_lines]
    assert order == sorted(order)


def test_assign_colors_deterministic_and_injective(bundle):
    a = assign_colors(bundle.description, 42)
    b = assign_colors(bundle.description, 42)
    c = assign_colors(bundle.description, 43)
    assert a.assignment == b.assignment
    assert len(set(a.assignment.values())) == len(a.assignment)
    assert any(assign_colors(bundle.description, s).assignment != a.assignment for s in range(5))
    assert c.assignment.keys() == a.assignment.keys()


def test_palette_exhausted():
    names = [f"t{i}" for i in range(12)]
    text = "sprite avatar > MovingAvatar\n"
    text += "".join(f"sprite {n} > Immovable\n" for n in names)
    text += "map a > avatar\n"
    text += "terminate > SpriteCounter type=t0 limit=0 win\n"
    text += "terminate > SpriteCounter type=avatar limit=0 lose\n"
    desc = parse_game_description(text)
    with pytest.raises(PaletteExhausted):
        assign_colors(desc, 0)


def test_avatar_never_designated(bundle):
    state = init_episode(bundle, 0, 0)
    cmap = assign_colors(bundle.description, 0)
    obs = render_observation(state, cmap)
    assert "avatar" not in obs.lower()


def test_system_prompts_nest(bundle):
    minimal = render_system_prompt("minimal")
    elaborate = render_system_prompt("elaborate")
    cmap = fixed_cmap(bundle)
    oracle = render_system_prompt("oracle", bundle.description, cmap)
    assert minimal in elaborate and elaborate in oracle
    assert "up, down, left, right, action, wait" in minimal
    with pytest.raises(ValueError):
        render_system_prompt("oracle")


def test_oracle_prompt_anonymizes_types(bundle):
    cmap = fixed_cmap(bundle)
    text = anonymize_rules(bundle.description, cmap)
    for name in ("avatar", "gem", "exit"):
        assert name not in text
    assert "DARKBLUE" in text and "GREEN" in text
    # rule structure preserved
    assert "collectResource" in text
