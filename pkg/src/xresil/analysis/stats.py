"""Event-independent distribution and interconnectivity statistics."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Mapping

from ..embedding import CsEntityMap, EmbeddedMaps
from ..ingest import DatasetBundle
from ..model import LinkKind
from .impact import link_kinds


@dataclass(frozen=True)
class Usage:
    segments: int
    cables: int
    stations: int
    p_countries: int


@dataclass(frozen=True)
class ConnectivityTables:
    country: Mapping[str, Usage]
    asn: Mapping[int, Usage]
    own_cable_reach: Mapping[str, int]

    def cdf(self, kind: str, column: str) -> list[tuple[int, float]]:
        """(value, cumulative fraction) pairs for one usage column."""
        table = self.country if kind == "country" else self.asn
        return cdf([getattr(u, column) for u in table.values()])


def cdf(values) -> list[tuple[int, float]]:
    vals = sorted(values)
    n = len(vals)
    out: list[tuple[int, float]] = []
    for k, v in enumerate(vals, start=1):
        if out and out[-1][0] == v:
            out[-1] = (v, k / n)
        else:
            out.append((v, k / n))
    return out


def _usage(cs_map: CsEntityMap, bundle: DatasetBundle) -> dict[Hashable, Usage]:
    segs_of: dict[Hashable, set] = defaultdict(set)
    for seg, d in cs_map.by_segment.items():
        for e in d:
            segs_of[e].add(seg)
    stations = bundle.stations
    out: dict[Hashable, Usage] = {}
    for e in sorted(segs_of):
        segs = segs_of[e]
        st = {sid for s in segs for sid in s.stations}
        out[e] = Usage(
            segments=len(segs),
            cables=len({s.cable_id for s in segs}),
            stations=len(st),
            p_countries=len({stations[sid].country for sid in st}),
        )
    return out


def own_cable_reach(bundle: DatasetBundle) -> dict[str, int]:
    """Per country: how many countries the cables landing in it reach (itself included)."""
    stations = bundle.stations
    cable_countries: dict[str, set[str]] = defaultdict(set)
    for seg in bundle.segments:
        cable_countries[seg.cable_id].add(stations[seg.station_a].country)
        cable_countries[seg.cable_id].add(stations[seg.station_b].country)
    reach: dict[str, set[str]] = defaultdict(set)
    for countries in cable_countries.values():
        for c in countries:
            reach[c] |= countries
    return {c: len(reach[c]) for c in sorted(reach)}


def connectivity_stats(maps: EmbeddedMaps, bundle: DatasetBundle) -> ConnectivityTables:
    """Physical components used by each N-Country and each AS.

    Counts distinct segments, cables, landing stations and P-Countries reached
    through the IP links of the entity.
    """
    return ConnectivityTables(
        country=_usage(maps.cs_nc, bundle),
        asn=_usage(maps.cs_as, bundle),
        own_cable_reach=own_cable_reach(bundle),
    )


@dataclass(frozen=True)
class IntraShare:
    intra: int
    resolvable: int

    @property
    def fraction(self) -> float:
        return self.intra / self.resolvable


def intra_fraction_per_p_country(cs_map: CsEntityMap, bundle: DatasetBundle) -> dict[str, IntraShare]:
    """Share of intra-AS links among AS-resolvable links using each country's cables.

    Countries whose cables carry no AS-resolvable link are omitted.
    """
    kinds = link_kinds(bundle)
    stations = bundle.stations
    links_of: dict[str, set[int]] = defaultdict(set)
    for seg, ids in cs_map.segment_links.items():
        pa = stations[seg.station_a].country
        pb = stations[seg.station_b].country
        links_of[pa] |= ids
        if pb != pa:
            links_of[pb] |= ids
    out: dict[str, IntraShare] = {}
    for p in sorted(links_of):
        intra = resolvable = 0
        for i in links_of[p]:
            k = kinds[i]
            if k is None:
                continue
            resolvable += 1
            if k is LinkKind.INTRA:
                intra += 1
        if resolvable:
            out[p] = IntraShare(intra, resolvable)
    return out
