"""Behavioral statistics over session traces.

Discovery is the cumulative number of steps a player spends on a level up to
and including its first win; execution is the length of each later win on the
same level. Distribution comparisons work on natural-log step counts: the
1-D Wasserstein distance is computed exactly from the quantile functions, and
densities use a Gaussian KDE with the Silverman rule. Kaplan–Meier handles
levels that were never solved (right-censored at the steps actually played).

Everything here is a pure function of loaded traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, ProtocolMismatch
from .runner import FIXED_WINDOW, SessionTrace

INF_DEPTH = math.inf  # isolation sentinel: the sequence never becomes unique


@dataclass
class MetricSample:
    """Labeled step counts plus censoring times for survival analysis."""

    label: str
    values: list[float] = field(default_factory=list)
    censored: list[float] = field(default_factory=list)  # steps played, no win

    def __post_init__(self):
        if any(v <= 0 for v in self.values):
            raise ValueError("step counts must be positive")
        if any(c <= 0 for c in self.censored):
            raise ValueError("censoring steps must be positive")

    @property
    def denominator(self) -> int:
        """Level-instances: solved levels plus censored (unsolved) ones."""
        return len(self.values) + len(self.censored)


@dataclass
class KMCurve:
    grid: list[float]  # event steps, ascending
    solved_fraction: list[float]  # nondecreasing, in [0, 1]

    def at(self, t: float) -> float:
        frac = 0.0
        for step, value in zip(self.grid, self.solved_fraction):
            if step <= t:
                frac = value
            else:
                break
        return frac


@dataclass
class ProgressionCurve:
    grid: list[float]
    mean_level: list[float]
    sem: list[float]


@dataclass
class TrieNode:
    count: int = 0
    children: dict[str, "TrieNode"] = field(default_factory=dict)


@dataclass
class PrefixTrie:
    root: TrieNode
    isolation_depths: list[float]  # per participant, INF_DEPTH if never unique
    n_participants: int


# ----------------------------------------------------------------------
# Sample extraction


def _level_records(traces: list[SessionTrace], levels=None):
    for trace in traces:
        for rec in sorted(trace.levels, key=lambda r: r.level):
            if rec.censored or not rec.episodes:
                continue
            if levels is not None and rec.level not in levels:
                continue
            yield trace, rec


def discovery_times(traces: list[SessionTrace], levels=None, label: str = "discovery") -> MetricSample:
    """Cumulative steps to first win, one value per solved (trace, level);
    unsolved levels enter as censorings at the steps actually played."""
    if not traces:
        raise EmptyInput("no traces")
    sample = MetricSample(label)
    for _, rec in _level_records(traces, levels):
        d = rec.discovery_steps
        if d is not None:
            sample.values.append(float(d))
        else:
            sample.censored.append(float(sum(ep.steps for ep in rec.episodes)))
    return sample


def execution_times(traces: list[SessionTrace], levels=None, label: str = "execution") -> MetricSample:
    """Steps per win after the first on each level."""
    if not traces:
        raise EmptyInput("no traces")
    sample = MetricSample(label)
    for _, rec in _level_records(traces, levels):
        sample.values.extend(float(s) for s in rec.execution_steps)
    return sample


# ----------------------------------------------------------------------
# Distribution distance and density


def log_emd(a: MetricSample, b: MetricSample) -> float:
    """Wasserstein-1 distance between ln(values) of the two samples.

    Exact quantile-function integral: both empirical CDFs are piecewise
    constant with jumps 1/n and 1/m, so replicating each sorted sample to
    length lcm(n, m) reduces the integral to a mean absolute difference.
    """
    if not a.values or not b.values:
        raise EmptyInput("log_emd needs nonempty samples")
    xs = np.sort(np.log(np.asarray(a.values, dtype=float)))
    ys = np.sort(np.log(np.asarray(b.values, dtype=float)))
    n, m = len(xs), len(ys)
    size = math.lcm(n, m)
    xr = np.repeat(xs, size // n)
    yr = np.repeat(ys, size // m)
    return float(np.mean(np.abs(xr - yr)))


def silverman_bandwidth(log_values: np.ndarray) -> float:
    n = len(log_values)
    sigma = float(np.std(log_values, ddof=1)) if n > 1 else 0.0
    q1, q3 = np.quantile(log_values, [0.25, 0.75])
    iqr = float(q3 - q1)
    spread = min(x for x in (sigma, iqr / 1.34) if x > 0) if (sigma > 0 or iqr > 0) else 0.0
    if spread <= 0:
        return 0.1
    return 0.9 * spread * n ** (-1 / 5)


def kde_curve(sample: MetricSample, grid: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Peak-normalized Gaussian KDE of ln(values); returns (log grid, density)."""
    if not sample.values:
        raise EmptyInput("kde_curve needs a nonempty sample")
    logs = np.log(np.asarray(sample.values, dtype=float))
    h = silverman_bandwidth(logs)
    if grid is None:
        grid = np.linspace(logs.min() - 3 * h, logs.max() + 3 * h, 256)
    grid = np.asarray(grid, dtype=float)
    z = (grid[:, None] - logs[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (len(logs) * h * math.sqrt(2 * math.pi))
    peak = density.max()
    return grid, density / peak if peak > 0 else density


# ----------------------------------------------------------------------
# Survival and progression


def km_curve(sample: MetricSample) -> KMCurve:
    """Kaplan–Meier product-limit over win events with right-censoring;
    solved_fraction(t) = 1 − S(t). Ties: wins processed before censorings."""
    if not sample.values and not sample.censored:
        raise EmptyInput("km_curve needs events or censorings")
    wins = sorted(sample.values)
    cens = sorted(sample.censored)
    times = sorted(set(wins))
    grid, solved = [], []
    survival = 1.0
    for t in times:
        d = sum(1 for w in wins if w == t)
        # at risk: anything (win or censoring) still unresolved at t⁻,
        # censorings tied at t included because wins come first
        at_risk = sum(1 for w in wins if w >= t) + sum(1 for c in cens if c >= t)
        survival *= 1.0 - d / at_risk
        grid.append(float(t))
        solved.append(1.0 - survival)
    return KMCurve(grid=grid, solved_fraction=solved)


def _mastery_staircase(trace: SessionTrace) -> list[tuple[int, int]]:
    """(cumulative step, level reached) jump points for one trajectory."""
    k = trace.header.get("config", {}).get("consecutive_wins_to_advance", 2)
    points = []
    cumulative = 0
    reached = 0
    for rec in sorted(trace.levels, key=lambda r: r.level):
        streak = 0
        mastered_at = None
        for ep in rec.episodes:
            cumulative += ep.steps
            streak = streak + 1 if ep.outcome == "won" else 0
            if streak >= k and mastered_at is None:
                mastered_at = cumulative
        if mastered_at is None:
            break
        reached += 1
        points.append((mastered_at, reached))
    return points


def progression_curve(
    traces: list[SessionTrace], budget: int, grid: np.ndarray | None = None
) -> ProgressionCurve:
    """Average level reached vs cumulative steps; stalled trajectories hold
    their last level through the budget."""
    if not traces:
        raise EmptyInput("no traces")
    if grid is None:
        grid = np.arange(0, budget + 1, dtype=float)
    grid = np.asarray(grid, dtype=float)
    levels = np.zeros((len(traces), len(grid)))
    for i, trace in enumerate(traces):
        for step_at, level in _mastery_staircase(trace):
            levels[i, grid >= step_at] = level
    mean = levels.mean(axis=0)
    if len(traces) > 1:
        sem = levels.std(axis=0, ddof=1) / math.sqrt(len(traces))
    else:
        sem = np.zeros(len(grid))
    return ProgressionCurve(grid=list(grid), mean_level=list(mean), sem=list(sem))


# ----------------------------------------------------------------------
# Tables


def solve_table(traces: list[SessionTrace]) -> dict[str, dict]:
    """Per-game level-solve rate and discovery median with linear-interpolation
    quartiles; unsolved levels count only in the denominator."""
    if not traces:
        raise EmptyInput("no traces")
    by_game: dict[str, list[SessionTrace]] = {}
    for trace in traces:
        by_game.setdefault(trace.header["game"], []).append(trace)
    table = {}
    for game, group in sorted(by_game.items()):
        sample = discovery_times(group)
        row = {
            "solved": len(sample.values),
            "total": sample.denominator,
            "rate": len(sample.values) / sample.denominator if sample.denominator else 0.0,
        }
        if sample.values:
            q1, median, q3 = np.quantile(sample.values, [0.25, 0.5, 0.75])
            row.update(median=float(median), q1=float(q1), q3=float(q3))
        else:
            row.update(median=None, q1=None, q3=None)
        table[game] = row
    return table


def unsolved_advancement(traces: list[SessionTrace]) -> dict[str, dict]:
    """Fraction of played (trace, level) pairs advanced past without a win.
    Only meaningful under the fixed-window protocol."""
    if not traces:
        raise EmptyInput("no traces")
    results: dict[str, dict] = {}
    for trace in traces:
        protocol = trace.header.get("config", {}).get("protocol")
        if protocol != FIXED_WINDOW:
            raise ProtocolMismatch(
                f"unsolved_advancement needs fixed_window traces, got {protocol!r}"
            )
        game = trace.header["game"]
        row = results.setdefault(game, {"unsolved": 0, "played": 0})
        for rec in trace.levels:
            if rec.censored or not rec.episodes:
                continue
            row["played"] += 1
            if not any(ep.outcome == "won" for ep in rec.episodes):
                row["unsolved"] += 1
    for row in results.values():
        row["fraction"] = row["unsolved"] / row["played"] if row["played"] else 0.0
    return results


# ----------------------------------------------------------------------
# Prefix trie / noise ceiling

TERMINAL = "$end"


def build_prefix_trie(sequences: list[list[str]]) -> PrefixTrie:
    """Shared-prefix trie over one action sequence per participant.

    Sequence end is a terminal edge, so a finished sequence that is a strict
    prefix of another still isolates (at depth len+1). Isolation depth is the
    smallest depth whose node holds that participant alone; duplicates share
    every node and get the INF_DEPTH sentinel.
    """
    if not sequences:
        raise EmptyInput("no sequences")
    root = TrieNode(count=len(sequences))
    paths = [[str(a) for a in seq] + [TERMINAL] for seq in sequences]
    for path in paths:
        node = root
        for symbol in path:
            node = node.children.setdefault(symbol, TrieNode())
            node.count += 1
    depths: list[float] = []
    for path in paths:
        node = root
        depth = INF_DEPTH
        for d, symbol in enumerate(path, start=1):
            node = node.children[symbol]
            if node.count == 1:
                depth = d
                break
        depths.append(depth)
    return PrefixTrie(root=root, isolation_depths=depths, n_participants=len(sequences))


def divergence_curve(trie: PrefixTrie, max_depth: int) -> list[float]:
    """Fraction of participants whose depth-d prefix is unique, d = 1..max_depth.
    Equals the CDF of isolation depths, so it is nondecreasing."""
    return [
        sum(1 for depth in trie.isolation_depths if depth <= d) / trie.n_participants
        for d in range(1, max_depth + 1)
    ]
