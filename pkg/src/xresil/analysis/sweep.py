"""Probabilistic failure impact: sweep failure probability and sampling strategy."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, TypeVar

from ..embedding import EmbeddedMaps
from ..identify import FailureDistribution, Identifier, Scenario, Strategy
from .impact import COMPONENTS, ImpactReport, cross_layer_impact

T = TypeVar("T")


def worker_count(threads: Optional[int] = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("XRESIL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def ordered_map(fn: Callable[..., T], items: Sequence, threads: Optional[int] = None) -> list[T]:
    """``map`` over a thread pool; results come back in input order."""
    n = worker_count(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepRow:
    p: float
    strategy: Strategy
    component: str
    mean_fraction: float


def parse_probabilities(text: str) -> list[float]:
    """``"0.01:1.0:0.01"`` (inclusive range) or ``"0.05,0.5,1.0"``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("probability step must be positive")
        n = int(round((stop - start) / step))
        out = [round(start + k * step, 10) for k in range(n + 1)]
        return [p for p in out if p <= stop + 1e-12]
    return [float(x) for x in text.split(",") if x.strip()]


def probability_sweep(
    scenario: Scenario,
    identifier: Identifier,
    maps: EmbeddedMaps,
    probabilities: Iterable[float],
    strategies: Iterable[Strategy] = (Strategy.TOP_N, Strategy.RANDOM, Strategy.WEIGHTED),
    runs: int = 10,
    threads: Optional[int] = None,
) -> list[SweepRow]:
    """Mean impact fraction per component for every (probability, strategy) cell.

    RANDOM and WEIGHTED average ``runs`` draws seeded ``seed + run_index``
    (base seed from the scenario, default 0); TOP_N is deterministic and runs
    once.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    base_seed = scenario.distribution.seed or 0
    probabilities = list(probabilities)
    strategies = [Strategy.parse(s) if isinstance(s, str) else s for s in strategies]
    cells = []
    for strategy in strategies:
        for p in probabilities:
            n_runs = 1 if strategy is Strategy.TOP_N else runs
            for r in range(n_runs):
                seed = None if strategy is Strategy.TOP_N else base_seed + r
                cells.append((strategy, p, r, FailureDistribution(p, strategy, seed)))

    def run_cell(cell):
        dist = cell[3]
        return cross_layer_impact(identifier.identify(scenario, dist), maps, identifier.bundle)

    # warm the candidate cache before fanning out
    if scenario.model is not None:
        identifier.candidates(scenario.model, scenario.region)
    results = ordered_map(run_cell, cells, threads)
    acc: dict[tuple[Strategy, float], list[ImpactReport]] = {}
    for cell, rep in zip(cells, results):
        acc.setdefault((cell[0], cell[1]), []).append(rep)
    rows: list[SweepRow] = []
    for strategy in strategies:
        for p in probabilities:
            means = ImpactReport.mean_fractions(acc[(strategy, p)])
            rows.extend(SweepRow(p, strategy, comp, means[comp]) for comp in COMPONENTS)
    return rows
