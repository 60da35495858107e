from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vgdl_arena.core import GameBundle, parse_game_description, parse_level_layout


def make_bundle(desc_text: str, layout_text: str, name: str = "test") -> GameBundle:
    desc = parse_game_description(desc_text)
    layout = parse_level_layout(layout_text, desc.level_mapping, desc.avatar_def.name)
    return GameBundle(name, desc, [layout] * 9)


TOY_GAME = """
sprite avatar > MovingAvatar
sprite goal > Immovable
map a > avatar
map g > goal
map w > wall
interact goal avatar > killSprite score=1
terminate > Timeout steps=10 lose
terminate > SpriteCounter type=goal limit=0 win
"""

TOY_LEVEL = "wwwww\nwa gw\nwwwww\n"

UNWINNABLE_GAME = """
sprite avatar > MovingAvatar
sprite goal > Immovable
map a > avatar
map g > goal
map w > wall
terminate > SpriteCounter type=goal limit=0 win
terminate > SpriteCounter type=avatar limit=0 lose
"""

UNWINNABLE_LEVEL = "wwwww\nwa gw\nwwwww\n"


@pytest.fixture
def toy_bundle() -> GameBundle:
    """Walk right twice to win; timeout loses at step 10."""
    return make_bundle(TOY_GAME, TOY_LEVEL, "toy")


@pytest.fixture
def unwinnable_bundle() -> GameBundle:
    """No rule can ever remove the goal, so the win condition never fires."""
    return make_bundle(UNWINNABLE_GAME, UNWINNABLE_LEVEL, "stuck")
