"""Command-line entry point: `arena validate | eval | metrics | serve |
replay-verify | play`.

Option precedence is flags > config file > environment > defaults, and the
effective run configuration is echoed into every trace header so a run is
reproducible from its trace alone. Exit codes: 0 success, 1 downstream
failure (one machine-parseable `error: ...` line on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .core import load_bundle, load_bundled_game, validate_bundle
from .engine import Action
from .errors import ArenaError
from .gateway import API_KEY_ENV, AgentConfig, LlmAgent, RandomAgent, SequenceAgent
from .runner import (
    RunConfig,
    load_trace,
    run_session,
    trace_filename,
    verify_trace,
)

USAGE_EXIT = 2
ERROR_EXIT = 1


def _load_bundle_arg(spec: str):
    """A bundle argument is either a directory path or a bundled game name."""
    path = Path(spec)
    if path.is_dir():
        return load_bundle(path)
    return load_bundled_game(spec)


def _build_agent(spec: str, config: dict):
    """Agent specs: `random[:seed]`, `sequence:<a,b,...>`, or a JSON file of
    AgentConfig fields for a live model endpoint."""
    if spec.startswith("random"):
        _, _, seed = spec.partition(":")
        return RandomAgent(int(seed) if seed else 0)
    if spec.startswith("sequence:"):
        actions = [Action(tok.strip()) for tok in spec.split(":", 1)[1].split(",")]
        return SequenceAgent(actions)
    path = Path(spec)
    if path.is_file():
        fields = json.loads(path.read_text())
    else:
        fields = dict(config.get("agent", {}))
        fields.setdefault("model", spec)
    if "endpoint" not in fields and config.get("endpoint"):
        fields["endpoint"] = config["endpoint"]
    return LlmAgent(AgentConfig(**fields))


def _effective_config(args, keys: list[str]) -> dict:
    """Overlay: defaults < environment < --config file < explicit flags."""
    config: dict = {}
    if os.environ.get(API_KEY_ENV):
        config["api_key_env"] = API_KEY_ENV
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = json.loads(Path(args.config).read_text())
        config.update(file_cfg)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
        elif key in file_cfg:
            config[key] = file_cfg[key]
    return config


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


# ----------------------------------------------------------------------
# Subcommands


def cmd_validate(args) -> int:
    bundle = _load_bundle_arg(args.bundle)
    diags = validate_bundle(bundle)
    for d in diags:
        print(f"{d.code}: {d.message} (level {d.level})")
    if diags:
        return ERROR_EXIT
    print(f"ok: {bundle.game_name} ({len(bundle.levels)} levels)")
    return 0


def cmd_eval(args) -> int:
    config = _effective_config(
        args, ["protocol", "budget", "per_level_step_cap", "suggestion", "endpoint"]
    )
    bundle = _load_bundle_arg(args.bundle)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _parse_seeds(args.seeds)
    failures = 0
    for seed in seeds:
        agent = _build_agent(args.agent, config)
        run_cfg = RunConfig(
            protocol=config.get("protocol", "blocked"),
            global_step_budget=int(config.get("budget", 1600)),
            per_level_step_cap=config.get("per_level_step_cap"),
            suggestion_level=config.get("suggestion", "elaborate"),
            seed=seed,
        )
        path = out_dir / trace_filename(agent.name, bundle.game_name, seed)
        if path.exists() and not args.fresh:
            print(f"skip (exists): {path}")
            continue
        trace = run_session(
            bundle, run_cfg, agent, trace_path=path, extra_header={"cli_config": config}
        )
        wins = sum(
            1 for rec in trace.levels for ep in rec.episodes if ep.outcome == "won"
        )
        print(f"wrote {path} steps={trace.total_steps} wins={wins}")
        if trace.aborted:
            failures += 1
    return ERROR_EXIT if failures else 0


def _load_trace_dir(path: str):
    traces = []
    for file in sorted(Path(path).glob("*.trace.jsonl")):
        traces.append(load_trace(file))
    return traces


def cmd_metrics(args) -> int:
    from .report import write_report

    traces = _load_trace_dir(args.traces)
    if not traces:
        print("error: no trace files found", file=sys.stderr)
        return ERROR_EXIT
    humans = _load_trace_dir(args.human_traces) if args.human_traces else None
    written = write_report(traces, args.report, human_traces=humans)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.trace_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay_verify(args) -> int:
    trace = load_trace(args.trace)
    bundle = (
        _load_bundle_arg(args.bundle) if args.bundle else load_bundled_game(trace.header["game"])
    )
    mismatches = verify_trace(bundle, trace)
    if mismatches:
        for idx in mismatches:
            rec = trace.steps[idx]
            print(
                f"error: digest mismatch at step {idx} "
                f"(level {rec.level} episode {rec.episode} step {rec.step})",
                file=sys.stderr,
            )
        return ERROR_EXIT
    print(f"ok: {len(trace.steps)} steps verified")
    return 0


def cmd_play(args) -> int:
    print(
        f"serving live play on http://{args.host}:{args.port} "
        f"(open the web UI and create a session)"
    )
    return cmd_serve(args)


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arena")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a game bundle's structure")
    p.add_argument("--bundle", required=True)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("eval", help="run curriculum sessions and write traces")
    p.add_argument("--bundle", required=True)
    p.add_argument("--agent", required=True)
    p.add_argument("--protocol", choices=["blocked", "fixed_window"], default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--per-level-step-cap", dest="per_level_step_cap", type=int, default=None)
    p.add_argument("--suggestion", choices=["minimal", "elaborate", "oracle"], default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", default="traces")
    p.add_argument("--config", default=None)
    p.add_argument("--fresh", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("metrics", help="compute behavioral statistics and figures")
    p.add_argument("--traces", required=True)
    p.add_argument("--human-traces", dest="human_traces", default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("serve", help="run the HTTP/WebSocket server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--trace-dir", dest="trace_dir", default="traces")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay-verify", help="re-simulate a trace and check digests")
    p.add_argument("--trace", required=True)
    p.add_argument("--bundle", default=None)
    p.set_defaults(fn=cmd_replay_verify)

    p = sub.add_parser("play", help="serve for local human play")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--trace-dir", dest="trace_dir", default="traces")
    p.set_defaults(fn=cmd_play)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ArenaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR_EXIT
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
