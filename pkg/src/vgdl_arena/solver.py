"""Breadth-first search over engine states, used to derive scripted winning
sequences for deterministic levels."""

from __future__ import annotations

from collections import deque

from .core import GameBundle
from .engine import Action, init_episode, state_hash, step


def bfs_solve(
    bundle: GameBundle, level: int, seed: int = 0, max_depth: int = 60, max_nodes: int = 500_000
) -> list[Action] | None:
    """Shortest winning action sequence, or None if none found within limits.

    Correct only for deterministic levels (the RNG state is part of the
    search key, so stochastic games blow up quickly).
    """
    start = init_episode(bundle, level, seed)
    seen = {state_hash(start)}
    queue: deque[tuple[object, list[Action]]] = deque([(start, [])])
    nodes = 0
    while queue:
        state, path = queue.popleft()
        if len(path) >= max_depth:
            continue
        for act in Action:
            nodes += 1
            if nodes > max_nodes:
                return None
            child = state.clone()
            outcome = step(child, act)
            if outcome.episode_status == "won":
                return path + [act]
            if outcome.episode_status == "lost":
                continue
            h = state_hash(child)
            if h not in seen:
                seen.add(h)
                queue.append((child, path + [act]))
    return None
