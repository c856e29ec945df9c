"""Seeded replications, aggregation and CSV output."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..environment import RegretTrace, regret_trace
from ..policies import make_policy
from .config import ExperimentConfig, child_seed

RAW_HEADER = ("policy", "run", "checkpoint_t", "cum_pseudo_regret", "cum_reward")
AGGREGATE_HEADER = ("policy", "checkpoint_t", "mean", "sd", "se", "runs")


@dataclass(frozen=True)
class AggregateRow:
    policy: str
    checkpoint_t: int
    mean: float
    sd: float
    se: float
    runs: int


@dataclass
class AggregateResult:
    rows: list[AggregateRow]

    def curve(self, policy: str) -> list[AggregateRow]:
        return [r for r in self.rows if r.policy == policy]

    def final(self, policy: str) -> AggregateRow:
        rows = self.curve(policy)
        if not rows:
            raise KeyError(policy)
        return rows[-1]

    def at(self, policy: str, t: int) -> AggregateRow:
        for r in self.curve(policy):
            if r.checkpoint_t == t:
                return r
        raise KeyError((policy, t))


def summarize(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean, sample standard deviation and standard error (``sd = 0`` for one run)."""
    n = len(values)
    if n == 0:
        raise ValueError("no values to summarize")
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0, 0.0
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))
    return mean, sd, sd / math.sqrt(n)


def _run_one(args) -> tuple[int, int, RegretTrace]:
    config, policy_index, run = args
    pc = config.policies[policy_index]
    instance = pc.environment_for(config.instance)
    policy = make_policy(pc, config.instance)
    seed = child_seed(config.seed, policy_index, run)
    trace = regret_trace(instance, policy, seed, config.checkpoints)
    trace.actions = None
    return policy_index, run, trace


def run_traces(config: ExperimentConfig, threads: int = 1) -> dict[tuple[int, int], RegretTrace]:
    """All ``(policy_index, run)`` traces; results do not depend on ``threads``."""
    jobs = [(config, p, r) for p in range(len(config.policies)) for r in range(1, config.replications + 1)]
    if threads is None or threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1:
        done = map(_run_one, jobs)
        return {(p, r): trace for p, r, trace in done}
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return {(p, r): trace for p, r, trace in pool.map(_run_one, jobs, chunksize=1)}


def aggregate(config: ExperimentConfig, traces: dict[tuple[int, int], RegretTrace]) -> AggregateResult:
    rows = []
    for p, pc in enumerate(config.policies):
        matrix = np.array([traces[(p, r)].pseudo_regret for r in range(1, config.replications + 1)])
        for j, t in enumerate(config.checkpoints):
            mean, sd, se = summarize(matrix[:, j].tolist())
            rows.append(AggregateRow(pc.name, int(t), mean, sd, se, config.replications))
    return AggregateResult(rows)


def _fmt(x: float) -> str:
    # repr round-trips exactly, so aggregates can be recomputed from raw rows
    return repr(float(x))


def raw_rows(config: ExperimentConfig, traces: dict[tuple[int, int], RegretTrace]) -> Iterable[tuple]:
    for p, pc in enumerate(config.policies):
        for r in range(1, config.replications + 1):
            trace = traces[(p, r)]
            for t, regret, reward in zip(trace.checkpoints, trace.pseudo_regret, trace.reward):
                yield (pc.name, r, int(t), _fmt(regret), int(reward))


def write_outputs(
    out_dir: str | Path, config: ExperimentConfig, traces: dict[tuple[int, int], RegretTrace], result: AggregateResult
) -> tuple[Path, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    raw_path, agg_path = out / "raw.csv", out / "aggregate.csv"
    with open(raw_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RAW_HEADER)
        writer.writerows(raw_rows(config, traces))
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_HEADER)
        for row in result.rows:
            writer.writerow((row.policy, row.checkpoint_t, _fmt(row.mean), _fmt(row.sd), _fmt(row.se), row.runs))
    return raw_path, agg_path


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path | None = None, threads: int = 1, write: bool = True
) -> AggregateResult:
    """Run every (policy, replication) pair, aggregate, and optionally write CSVs."""
    traces = run_traces(config, threads)
    result = aggregate(config, traces)
    if write:
        write_outputs(out_dir if out_dir is not None else config.output_dir, config, traces, result)
    return result


def read_raw(path: str | Path) -> dict[str, dict[int, list[float]]]:
    """Raw CSV as ``{policy: {checkpoint_t: [regret per run]}}`` (runs in order)."""
    out: dict[str, dict[int, list[float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.setdefault(row["policy"], {}).setdefault(int(row["checkpoint_t"]), []).append(
                float(row["cum_pseudo_regret"])
            )
    return out
