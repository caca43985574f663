"""Intermediate cross-layer maps keyed by cable segment.

The CS-NC and CS-AS maps associate each (cable segment, country) or
(cable segment, ASN) pair with the ids of the IP links that use the segment
and have an endpoint in that entity. Every downstream analysis is a union
over these value sets for some set of failed segments.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Mapping

from .ingest import DatasetBundle, PathLike
from .model import CableSegment, CrossLayerRecord, LandingStation, PredictionMode

EMPTY: frozenset[int] = frozenset()


@dataclass(frozen=True, eq=False)
class CsEntityMap:
    """Segment x entity -> link ids, plus per-entity link totals.

    ``by_segment[seg][entity]`` holds the link ids; ``segment_links[seg]`` holds
    every link using ``seg`` regardless of whether its endpoints resolve to an
    entity. ``link_weight[i]`` is ``1/k`` for a link with ``k`` active
    predictions (always 1.0 in TOP mode).
    """

    kind: str
    mode: PredictionMode
    by_segment: Mapping[CableSegment, Mapping[Hashable, frozenset[int]]]
    totals: Mapping[Hashable, int]
    segment_links: Mapping[CableSegment, frozenset[int]]
    link_weight: tuple[float, ...]

    def get(self, segment: CableSegment, entity: Hashable) -> frozenset[int]:
        return self.by_segment.get(segment, {}).get(entity, EMPTY)

    def items(self) -> Iterator[tuple[tuple[CableSegment, Hashable], frozenset[int]]]:
        for seg in sorted(self.by_segment):
            d = self.by_segment[seg]
            for ent in sorted(d):
                yield (seg, ent), d[ent]

    def weight(self, segment: CableSegment, link_id: int) -> float:
        if link_id in self.segment_links.get(segment, EMPTY):
            return self.link_weight[link_id]
        return 0.0

    def entities(self) -> list:
        return sorted(self.totals)

    def __len__(self) -> int:
        return sum(len(d) for d in self.by_segment.values())


class CsNcMap(CsEntityMap):
    pass


class CsAsMap(CsEntityMap):
    pass


def _build(records: Iterable[CrossLayerRecord], mode: PredictionMode, attr: str, cls, kind: str) -> CsEntityMap:
    by_seg: dict[CableSegment, dict] = defaultdict(lambda: defaultdict(list))
    seg_links: dict[CableSegment, list[int]] = defaultdict(list)
    totals: dict = defaultdict(int)
    weights: list[float] = []
    top_only = mode is PredictionMode.TOP
    for i, rec in enumerate(records):
        ea = getattr(rec.endpoint_a, attr)
        eb = getattr(rec.endpoint_b, attr)
        if ea is None:
            ents = () if eb is None else (eb,)
        elif eb is None or eb == ea:
            ents = (ea,)
        else:
            ents = (ea, eb)
        for e in ents:
            totals[e] += 1
        preds = rec.predictions
        if top_only:
            segs = (preds[0][0],)
        else:
            segs = [p[0] for p in preds]
        weights.append(1.0 / len(segs))
        for s in segs:
            seg_links[s].append(i)
            if ents:
                d = by_seg[s]
                for e in ents:
                    d[e].append(i)
    return cls(
        kind=kind,
        mode=mode,
        by_segment={s: {e: frozenset(ids) for e, ids in d.items()} for s, d in by_seg.items()},
        totals=dict(totals),
        segment_links={s: frozenset(ids) for s, ids in seg_links.items()},
        link_weight=tuple(weights),
    )


def build_cs_nc(records: Iterable[CrossLayerRecord], mode: PredictionMode = PredictionMode.TOP) -> CsNcMap:
    """Aggregate IP links per (cable segment, endpoint country).

    A link with both endpoints in one country is stored once under that key;
    unknown countries contribute to no key but the link still appears in
    ``segment_links``.
    """
    return _build(records, PredictionMode(mode), "country", CsNcMap, "country")


def build_cs_as(records: Iterable[CrossLayerRecord], mode: PredictionMode = PredictionMode.TOP) -> CsAsMap:
    """Aggregate IP links per (cable segment, endpoint ASN)."""
    return _build(records, PredictionMode(mode), "asn", CsAsMap, "asn")


@dataclass(frozen=True, eq=False)
class PcNcMap:
    """(P-Country, N-Country) -> ids of links whose segments land in the P-Country."""

    mode: PredictionMode
    links: Mapping[tuple[str, str], frozenset[int]]

    def get(self, p_country: str, n_country: str) -> frozenset[int]:
        return self.links.get((p_country, n_country), EMPTY)

    def p_countries(self) -> list[str]:
        return sorted({p for p, _ in self.links})

    def n_countries(self) -> list[str]:
        return sorted({n for _, n in self.links})

    def counts(self) -> dict[tuple[str, str], int]:
        return {k: len(v) for k, v in self.links.items()}


def build_pc_nc(cs_nc: CsNcMap, stations: Mapping[str, LandingStation]) -> PcNcMap:
    acc: dict[tuple[str, str], set[int]] = defaultdict(set)
    for seg, d in cs_nc.by_segment.items():
        pa = stations[seg.station_a].country
        pb = stations[seg.station_b].country
        for n, ids in d.items():
            acc[(pa, n)].update(ids)
            if pb != pa:
                acc[(pb, n)].update(ids)
    return PcNcMap(cs_nc.mode, {k: frozenset(v) for k, v in sorted(acc.items())})


def segments_of_p_country(
    country: str, segment_universe: Iterable[CableSegment], stations: Mapping[str, LandingStation]
) -> set[CableSegment]:
    """All segments with a landing station in ``country``."""
    return {
        s
        for s in segment_universe
        if stations[s.station_a].country == country or stations[s.station_b].country == country
    }


@dataclass(frozen=True, eq=False)
class EmbeddedMaps:
    mode: PredictionMode
    cs_nc: CsNcMap
    cs_as: CsAsMap
    pc_nc: PcNcMap


def embed(bundle: DatasetBundle, mode: PredictionMode = PredictionMode.TOP) -> EmbeddedMaps:
    mode = PredictionMode(mode)
    cs_nc = build_cs_nc(bundle.records, mode)
    cs_as = build_cs_as(bundle.records, mode)
    return EmbeddedMaps(mode, cs_nc, cs_as, build_pc_nc(cs_nc, bundle.stations))


def dump_map(cs_map: CsEntityMap, path: PathLike) -> Path:
    """Debug dump as ``segment,entity,link_count``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "entity", "link_count"])
        for (seg, ent), ids in cs_map.items():
            w.writerow([str(seg), ent, len(ids)])
    return Path(path)


def dump_pc_nc(pc_nc: PcNcMap, path: PathLike) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p_country", "n_country", "link_count"])
        for (p, n), ids in sorted(pc_nc.links.items()):
            w.writerow([p, n, len(ids)])
    return Path(path)
