"""CPU-time sweeps over (d, N) grids and their normalized / speed-up tables."""

from __future__ import annotations

import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .experiment import run_strategy
from .io import write_table

BENCH_COLUMNS = (
    "d", "N", "strategy", "wall_ms", "consensus_reached", "final_time", "normalized_time", "speedup",
)


@dataclass
class BenchCell:
    """Median timing of one (d, N, strategy) cell.

    ``normalized_time`` is relative to the same strategy at the smallest
    (d, N) of the grid; ``speedup`` is full-strategy time over this cell's time
    at the same (d, N). Both stay ``None`` unless every cell involved reached
    consensus.
    """

    d: int
    N: int
    strategy: str
    wall_ms: float
    consensus_reached: bool
    final_time: float
    repeats_ms: list = field(default_factory=list)
    normalized_time: float | None = None
    speedup: float | None = None

    def row(self):
        return {c: getattr(self, c) for c in BENCH_COLUMNS}


def worker_count():
    """Worker cap from ``ABMRC_THREADS`` (default 1: cells run sequentially)."""
    raw = os.environ.get("ABMRC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _time_cell(cfg, repeats):
    times = []
    reached, final_time = True, float("nan")
    for _ in range(repeats):
        report = run_strategy(cfg)
        times.append(report.total_wall_ms)
        reached = reached and report.consensus_reached
        final_time = report.final_time
    return BenchCell(
        d=cfg.d, N=cfg.N, strategy=cfg.strategy, wall_ms=statistics.median(times),
        consensus_reached=reached, final_time=final_time, repeats_ms=times,
    )


def fill_ratios(cells):
    """Set normalized times and speed-ups in place; unconverged cells get ``None``."""
    by_key = {(c.d, c.N, c.strategy): c for c in cells}
    d0 = min(c.d for c in cells)
    n0 = min(c.N for c in cells)
    for c in cells:
        base = by_key.get((d0, n0, c.strategy))
        if base is not None and base.consensus_reached and c.consensus_reached:
            c.normalized_time = c.wall_ms / base.wall_ms
        full = by_key.get((c.d, c.N, "full"))
        if full is not None and full.consensus_reached and c.consensus_reached:
            c.speedup = full.wall_ms / c.wall_ms
    return cells


def run_bench(base_cfg, d_values, N_values, strategies, repeats=3, workers=None):
    """Time every (d, N, strategy) cell; each cell keeps the base seed and settings."""
    if not d_values or not N_values or not strategies:
        raise ValueError("bench grid must be nonempty")
    if repeats < 1:
        raise ValueError("repeats must be positive")
    cfgs = [
        base_cfg.override(d=d, N=N, strategy=s, name=f"bench_d{d}_N{N}_{s}", store_states=False,
                          record_clusters=False)
        for d in d_values for N in N_values for s in strategies
    ]
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        cells = [_time_cell(c, repeats) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_time_cell, cfgs, [repeats] * len(cfgs)))
    return fill_ratios(cells)


def pivot(cells, strategy, value):
    """Table rows indexed by d with one column per N, for a single strategy."""
    Ns = sorted({c.N for c in cells})
    rows = []
    for d in sorted({c.d for c in cells}):
        row = {"d": d}
        for c in cells:
            if c.d == d and c.strategy == strategy:
                row[f"N={c.N}"] = getattr(c, value)
        rows.append(row)
    return rows, ["d"] + [f"N={n}" for n in Ns]


def write_bench(cells, out_dir):
    """Write ``bench.table.csv`` plus per-strategy normalized and speed-up pivots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_table([c.row() for c in cells], BENCH_COLUMNS, out / "bench.table.csv")]
    for s in sorted({c.strategy for c in cells}):
        rows, cols = pivot(cells, s, "normalized_time")
        paths.append(write_table(rows, cols, out / f"bench.normalized.{s}.csv"))
        if s != "full":
            rows, cols = pivot(cells, s, "speedup")
            paths.append(write_table(rows, cols, out / f"bench.speedup.{s}.csv"))
    return paths
