"""Curriculum runner: protocols, budgets, censoring, trace persistence."""

from __future__ import annotations

import json

import pytest

from conftest import make_bundle
from vgdl_arena.engine import Action
from vgdl_arena.errors import AgentAborted, CorruptTrace, UnparseableReply
from vgdl_arena.gateway import ScriptedAgent
from vgdl_arena.runner import (
    RunConfig,
    censor_trace,
    load_trace,
    persist_trace,
    run_session,
    trace_filename,
    verify_trace,
)

WALKER = ScriptedAgent(lambda obs: Action.RIGHT, name="walker")
STALLER = ScriptedAgent(lambda obs: Action.WAIT, name="staller")


def walker():
    return ScriptedAgent(lambda obs: Action.RIGHT, name="walker")


def staller():
    return ScriptedAgent(lambda obs: Action.WAIT, name="staller")


# -- blocked-curriculum arithmetic ---------------------------------------------


def test_always_win_masters_all_levels(toy_bundle):
    trace = run_session(toy_bundle, RunConfig(seed=0), walker())
    # 2 steps per win, 2 consecutive wins per level, 9 levels
    assert trace.total_steps == 36
    assert len(trace.levels) == 9
    assert all(rec.mastered(2) for rec in trace.levels)


def test_never_win_consumes_exact_budget(unwinnable_bundle):
    trace = run_session(unwinnable_bundle, RunConfig(seed=0, global_step_budget=1600), staller())
    assert trace.total_steps == 1600
    assert [rec.level for rec in trace.levels] == [0]
    last = trace.levels[0].episodes[-1]
    assert last.outcome == "truncated"


def test_per_episode_cap_truncates(unwinnable_bundle):
    cfg = RunConfig(seed=0, global_step_budget=1600, per_level_step_cap=50)
    trace = run_session(unwinnable_bundle, cfg, staller())
    episodes = trace.levels[0].episodes
    assert len(episodes) == 32  # 1600 / 50
    assert all(ep.outcome == "truncated" and ep.steps == 50 for ep in episodes)


def test_losses_reset_win_streak(toy_bundle):
    # alternate win/stall-to-timeout: streak never reaches 2
    flips = {"n": 0}

    def policy(obs):
        if obs.startswith("STEP 0"):
            flips["n"] += 1
        return Action.RIGHT if flips["n"] % 2 else Action.WAIT

    trace = run_session(
        toy_bundle, RunConfig(seed=0, global_step_budget=60), ScriptedAgent(policy, "flip")
    )
    assert [rec.level for rec in trace.levels] == [0]


def test_fixed_window_advances_regardless(unwinnable_bundle):
    cfg = RunConfig(seed=0, protocol="fixed_window", fixed_window_steps=60, global_step_budget=1600)
    trace = run_session(unwinnable_bundle, cfg, staller())
    assert trace.total_steps == 540  # 9 levels x 60 steps
    assert [rec.level for rec in trace.levels] == list(range(9))


def test_dialogue_persists_across_episodes(toy_bundle):
    observed = []

    def policy(obs):
        observed.append(obs)
        return Action.RIGHT

    run_session(toy_bundle, RunConfig(seed=0), ScriptedAgent(policy, "spy"))
    # a LAST TRIAL line appears on every fresh episode after the first
    fresh = [o for o in observed if o.startswith("STEP 0")]
    assert sum("LAST TRIAL: won" in o for o in fresh) == len(fresh) - 1


def test_agent_abort_recorded_and_raised(toy_bundle, tmp_path):
    class Bad(ScriptedAgent):
        def act(self, *a):
            raise UnparseableReply("3 strikes")

    path = tmp_path / "bad.trace.jsonl"
    with pytest.raises(AgentAborted):
        run_session(toy_bundle, RunConfig(seed=0), Bad(None, "bad"), trace_path=path)
    assert load_trace(path).aborted == "3 strikes"


# -- censoring ----------------------------------------------------------------


def test_censor_drops_post_mastery_episodes(toy_bundle):
    trace = run_session(toy_bundle, RunConfig(seed=0), walker())
    # inflate level 0 with extra post-mastery wins, as a fixed-window trace might
    rec = trace.levels[0]
    rec.episodes = rec.episodes + rec.episodes
    censored = censor_trace(trace, k=2)
    assert len(censored.levels[0].episodes) == 2


def test_censor_cuts_all_levels_after_first_non_mastered(toy_bundle):
    trace = run_session(toy_bundle, RunConfig(seed=0), walker())
    trace.levels[3].episodes[-1].outcome = "lost"  # level 3 never mastered now
    censored = censor_trace(trace, k=2)
    for rec in censored.levels:
        if rec.level > 3:
            assert rec.censored and rec.episodes == []
    assert not censored.levels[3].censored


def test_censor_idempotent(toy_bundle):
    trace = run_session(toy_bundle, RunConfig(seed=0), walker())
    once = censor_trace(trace, k=2)
    twice = censor_trace(once, k=2)
    key = lambda t: [(r.level, len(r.episodes), r.censored) for r in t.levels]
    assert key(once) == key(twice)
    assert len(once.steps) == len(twice.steps)


def test_censor_noop_on_conforming_blocked_trace(toy_bundle):
    trace = run_session(toy_bundle, RunConfig(seed=0), walker())
    censored = censor_trace(trace, k=2)
    assert len(censored.steps) == len(trace.steps)
    assert [len(r.episodes) for r in censored.levels] == [
        len(r.episodes) for r in trace.levels
    ]


# -- persistence ---------------------------------------------------------------


def test_trace_filename():
    assert trace_filename("gpt", "zelda", 3) == "gpt__zelda__seed3.trace.jsonl"


def test_round_trip_persistence(toy_bundle, tmp_path):
    path = tmp_path / trace_filename("walker", "toy", 0)
    trace = run_session(toy_bundle, RunConfig(seed=0), walker(), trace_path=path)
    loaded = load_trace(path)
    assert loaded.header["game"] == "toy"
    assert loaded.header["schema_version"] == 1
    assert len(loaded.steps) == trace.total_steps
    assert [s.digest for s in loaded.steps] == [s.digest for s in trace.steps]
    # explicit persist produces an equivalent file
    path2 = tmp_path / "again.trace.jsonl"
    persist_trace(loaded, path2)
    assert [s.digest for s in load_trace(path2).steps] == [s.digest for s in loaded.steps]


def test_truncated_file_yields_partial_and_error(toy_bundle, tmp_path):
    path = tmp_path / "t.trace.jsonl"
    run_session(toy_bundle, RunConfig(seed=0), walker(), trace_path=path)
    lines = path.read_text().splitlines()
    cut = len(lines) // 2
    bad = tmp_path / "cut.trace.jsonl"
    bad.write_text("\n".join(lines[:cut]) + "\n{ not json\n")
    with pytest.raises(CorruptTrace) as exc_info:
        load_trace(bad)
    assert exc_info.value.line == cut + 1
    partial = exc_info.value.partial
    assert partial is not None and len(partial.steps) > 0


def test_unsupported_schema_version(tmp_path):
    path = tmp_path / "v.trace.jsonl"
    path.write_text(json.dumps({"kind": "header", "schema_version": 99}) + "\n")
    with pytest.raises(CorruptTrace):
        load_trace(path)


def test_replay_verification_detects_tampering(toy_bundle, tmp_path):
    path = tmp_path / "v.trace.jsonl"
    run_session(toy_bundle, RunConfig(seed=0), walker(), trace_path=path)
    trace = load_trace(path)
    assert verify_trace(toy_bundle, trace) == []
    trace.steps[5].digest ^= 1
    assert verify_trace(toy_bundle, trace) == [5]


def test_config_echo_complete(toy_bundle, tmp_path):
    cfg = RunConfig(seed=9, per_level_step_cap=25, suggestion_level="minimal")
    path = tmp_path / "c.trace.jsonl"
    run_session(toy_bundle, cfg, walker(), trace_path=path)
    header = load_trace(path).header
    rebuilt = RunConfig(**header["config"])
    assert rebuilt == cfg
    assert header["seed"] == 9
    assert "colors" in header


def test_budget_invariant(toy_bundle, unwinnable_bundle):
    for bundle, agent in ((toy_bundle, walker()), (unwinnable_bundle, staller())):
        trace = run_session(bundle, RunConfig(seed=1, global_step_budget=100), agent)
        assert trace.total_steps <= 100
        if trace.total_steps == 100:
            assert trace.levels[-1].episodes[-1].outcome == "truncated"


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(global_step_budget=0)
    with pytest.raises(ValueError):
        RunConfig(consecutive_wins_to_advance=0)
