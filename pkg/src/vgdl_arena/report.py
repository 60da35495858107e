"""Report rendering: CSV tables, plot-ready curve files, and figures.

Every figure has a machine-readable twin (same stem, .csv) so downstream
tooling never has to scrape pixels.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import EmptyInput
from .metrics import (
    MetricSample,
    build_prefix_trie,
    discovery_times,
    divergence_curve,
    execution_times,
    kde_curve,
    km_curve,
    log_emd,
    progression_curve,
    solve_table,
)
from .runner import SessionTrace


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _group_by_game(traces: list[SessionTrace]) -> dict[str, list[SessionTrace]]:
    groups: dict[str, list[SessionTrace]] = {}
    for trace in traces:
        groups.setdefault(trace.header["game"], []).append(trace)
    return groups


def _savefig(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, bbox_inches="tight")


def write_report(
    traces: list[SessionTrace],
    out_dir: str | Path,
    human_traces: list[SessionTrace] | None = None,
    budget: int = 1600,
) -> list[Path]:
    """Emit the full report bundle into `out_dir`; returns written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not traces:
        raise EmptyInput("no traces to report on")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(path: Path):
        written.append(path)
        return path

    # -- solve table -------------------------------------------------------
    table = solve_table(traces)
    _write_csv(
        emit(out / "solve_table.csv"),
        ["game", "solved", "total", "rate", "median", "q1", "q3"],
        [
            [g, r["solved"], r["total"], f"{r['rate']:.4f}", r["median"], r["q1"], r["q3"]]
            for g, r in table.items()
        ],
    )

    # -- EMD vs human per game -----------------------------------------------
    if human_traces:
        rows = []
        humans_by_game = _group_by_game(human_traces)
        for game, group in _group_by_game(traces).items():
            if game not in humans_by_game:
                continue
            for name, fn in (("discovery", discovery_times), ("execution", execution_times)):
                a, b = fn(group), fn(humans_by_game[game])
                if a.values and b.values:
                    rows.append([game, name, f"{log_emd(a, b):.6f}"])
        _write_csv(emit(out / "emd.csv"), ["game", "measure", "log_emd"], rows)

    # -- KDE of discovery ----------------------------------------------------
    fig, ax = plt.subplots(figsize=(6, 4))
    kde_rows = []
    for label, group in [("agent", traces)] + (
        [("human", human_traces)] if human_traces else []
    ):
        sample = discovery_times(group)
        if not sample.values:
            continue
        grid, density = kde_curve(sample)
        kde_rows += [[label, f"{g:.6f}", f"{d:.6f}"] for g, d in zip(grid, density)]
        ax.plot(grid, density, label=label)
    _write_csv(emit(out / "kde_discovery.csv"), ["cohort", "log_steps", "density"], kde_rows)
    ax.set_xlabel("ln(cumulative steps to first win)")
    ax.set_ylabel("peak-normalized density")
    if ax.lines:
        ax.legend()
    _savefig(fig, emit(out / "kde_discovery.png"))
    plt.close(fig)

    # -- Kaplan–Meier ---------------------------------------------------------
    sample = discovery_times(traces)
    if sample.values or sample.censored:
        curve = km_curve(sample)
        _write_csv(
            emit(out / "km_discovery.csv"),
            ["step", "solved_fraction"],
            [[f"{s:.1f}", f"{v:.6f}"] for s, v in zip(curve.grid, curve.solved_fraction)],
        )
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.step([0.0] + curve.grid, [0.0] + curve.solved_fraction, where="post")
        ax.set_xlabel("cumulative steps")
        ax.set_ylabel("P(level solved by step t)")
        ax.set_ylim(0, 1.02)
        _savefig(fig, emit(out / "km_discovery.png"))
        plt.close(fig)

    # -- Progression -----------------------------------------------------------
    prog = progression_curve(traces, budget=budget)
    stride = max(1, len(prog.grid) // 800)
    _write_csv(
        emit(out / "progression.csv"),
        ["step", "mean_level", "sem"],
        [
            [f"{prog.grid[i]:.1f}", f"{prog.mean_level[i]:.6f}", f"{prog.sem[i]:.6f}"]
            for i in range(0, len(prog.grid), stride)
        ],
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    grid = np.asarray(prog.grid)
    mean = np.asarray(prog.mean_level)
    sem = np.asarray(prog.sem)
    ax.plot(grid, mean)
    ax.fill_between(grid, mean - sem, mean + sem, alpha=0.3)
    ax.set_xlabel("cumulative steps")
    ax.set_ylabel("mean level reached")
    _savefig(fig, emit(out / "progression.png"))
    plt.close(fig)

    # -- Divergence (first-attempt action sequences, per game+level 0) ---------
    sequences = []
    for trace in traces:
        first_ep = [
            rec.action for rec in trace.steps if rec.level == 0 and rec.episode == 0
        ]
        if first_ep:
            sequences.append(first_ep)
    if len(sequences) >= 1:
        trie = build_prefix_trie(sequences)
        depth = max((len(s) for s in sequences), default=1) + 1
        fractions = divergence_curve(trie, depth)
        _write_csv(
            emit(out / "divergence.csv"),
            ["depth", "unique_fraction"],
            [[d + 1, f"{f:.6f}"] for d, f in enumerate(fractions)],
        )
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(range(1, depth + 1), fractions)
        ax.set_xlabel("prefix depth (steps)")
        ax.set_ylabel("fraction of unique prefixes")
        ax.set_ylim(0, 1.02)
        _savefig(fig, emit(out / "divergence.png"))
        plt.close(fig)

    return written
