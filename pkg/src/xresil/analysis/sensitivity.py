"""Sensitivity of the impact report to cross-layer mapping errors.

Links in the impacted region are reassigned at random to one of three
classes: correct top prediction, correct secondary prediction (a uniformly
chosen non-top segment becomes the link's segment), or incorrect (the link is
dropped from impact accounting).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..embedding import EmbeddedMaps, build_cs_nc
from ..errors import InvalidMix, ModeMismatch
from ..identify import ImpactedSet
from ..ingest import DatasetBundle
from ..model import PredictionMode
from .impact import ImpactReport, impact_from_links, impacted_links
from .sweep import ordered_map


@dataclass(frozen=True)
class ErrorMix:
    """Percentages of (top-correct, secondary-correct, incorrect) links."""

    top: float
    secondary: float
    incorrect: float

    def __post_init__(self) -> None:
        parts = (self.top, self.secondary, self.incorrect)
        if any(x < 0 for x in parts) or abs(sum(parts) - 100.0) > 1e-9:
            raise InvalidMix(f"error mix must be non-negative and sum to 100, got {parts}")

    @classmethod
    def parse(cls, text: str) -> "ErrorMix":
        try:
            t, s, i = (float(x) for x in str(text).strip("()[] ").split(","))
        except ValueError:
            raise InvalidMix(f"error mix must look like 'top,secondary,incorrect', got {text!r}") from None
        return cls(t, s, i)

    def label(self) -> str:
        return "(" + ",".join(f"{x:g}" for x in (self.top, self.secondary, self.incorrect)) + ")"


@dataclass(frozen=True)
class SensitivityResult:
    mix: ErrorMix
    rounds: tuple[ImpactReport, ...]

    def mean_fractions(self) -> dict[str, float]:
        return ImpactReport.mean_fractions(self.rounds)


def perturbed_links(
    bundle: DatasetBundle,
    impacted: ImpactedSet,
    region_links: np.ndarray,
    mix: ErrorMix,
    rng: np.random.Generator,
) -> list[int]:
    """Links still impacted after one random round of mapping errors."""
    n = region_links.shape[0]
    u = rng.random(n)
    pick = rng.random(n)
    t = mix.top / 100.0
    ts = (mix.top + mix.secondary) / 100.0
    failed = impacted.segments
    records = bundle.records
    kept: list[int] = []
    for k in range(n):
        i = int(region_links[k])
        if u[k] < t:
            kept.append(i)
        elif u[k] < ts:
            preds = records[i].predictions
            m = len(preds)
            if m == 1:
                kept.append(i)
                continue
            j = 1 + min(m - 2, int(pick[k] * (m - 1)))
            if preds[j][0] in failed:
                kept.append(i)
    return kept


def sensitivity_run(
    bundle: DatasetBundle,
    impacted: ImpactedSet,
    mix: ErrorMix,
    rounds: int = 10,
    seed: int = 0,
    maps: Optional[EmbeddedMaps] = None,
    threads: Optional[int] = None,
) -> SensitivityResult:
    """Impact reports over ``rounds`` error draws, seeded ``seed + round_index``.

    The impacted region is the set of links whose top prediction failed.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if maps is not None and maps.mode is not PredictionMode.TOP:
        raise ModeMismatch("sensitivity analysis perturbs top predictions; use TOP maps")
    cs_nc = maps.cs_nc if maps is not None else build_cs_nc(bundle.records, PredictionMode.TOP)
    region = np.array(sorted(impacted_links(impacted.segments, cs_nc)), dtype=np.int64)

    def one(r: int) -> ImpactReport:
        rng = np.random.default_rng(seed + r)
        return impact_from_links(impacted.segments, perturbed_links(bundle, impacted, region, mix, rng), bundle)

    return SensitivityResult(mix, tuple(ordered_map(one, list(range(rounds)), threads)))
