"""Cross-layer impact, risk profiles and intra/inter-AS comparison."""

from __future__ import annotations

import weakref
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from ..embedding import CsEntityMap, CsNcMap, EmbeddedMaps
from ..errors import ModeMismatch
from ..identify import ImpactedSet, Identifier, Scenario, union_events
from ..ingest import DatasetBundle
from ..model import AsLink, CableSegment, LinkKind, PredictionMode

COMPONENTS = ("cable_segments", "cables", "ip_links", "ips", "as_links", "ases")


@dataclass(frozen=True)
class ComponentImpact:
    impacted: int
    total: int

    def __post_init__(self) -> None:
        if not 0 <= self.impacted <= self.total:
            raise ValueError(f"impacted count {self.impacted} not within [0, {self.total}]")

    @property
    def fraction(self) -> float:
        return self.impacted / self.total if self.total else 0.0


@dataclass(frozen=True)
class ImpactReport:
    cable_segments: ComponentImpact
    cables: ComponentImpact
    ip_links: ComponentImpact
    ips: ComponentImpact
    as_links: ComponentImpact
    ases: ComponentImpact

    def rows(self) -> list[tuple[str, ComponentImpact]]:
        return [(name, getattr(self, name)) for name in COMPONENTS]

    @staticmethod
    def mean_fractions(reports: Sequence["ImpactReport"]) -> dict[str, float]:
        """Per-component mean fraction, computed from summed counts.

        Totals do not vary between reports of one dataset, so summing counts
        before dividing gives the exact mean (identical runs average to exactly
        their own fraction).
        """
        out = {}
        for comp in COMPONENTS:
            hit = tot = 0
            for rep in reports:
                c = getattr(rep, comp)
                hit += c.impacted
                tot += c.total
            out[comp] = hit / tot if tot else 0.0
        return out

    def fractions(self) -> dict[str, float]:
        return {name: c.fraction for name, c in self.rows()}

    def counts(self) -> dict[str, int]:
        return {name: c.impacted for name, c in self.rows()}


def _check_mode(maps: EmbeddedMaps, mode: Optional[PredictionMode]) -> None:
    if maps.cs_nc.mode is not maps.mode or maps.cs_as.mode is not maps.mode:
        raise ModeMismatch("embedded maps were built with different prediction modes")
    if mode is not None and PredictionMode(mode) is not maps.mode:
        raise ModeMismatch(f"maps built in {maps.mode.value} mode, {PredictionMode(mode).value} requested")


def impacted_links(segments: Iterable[CableSegment], cs_map: CsEntityMap) -> set[int]:
    out: set[int] = set()
    seg_links = cs_map.segment_links
    for s in segments:
        ids = seg_links.get(s)
        if ids:
            out |= ids
    return out


def impact_from_links(segments: Iterable[CableSegment], link_ids: Iterable[int], bundle: DatasetBundle) -> ImpactReport:
    """Six-component report for a set of failed segments and affected links."""
    universe = bundle.segment_set
    segs = [s for s in segments if s in universe]
    ips: set[str] = set()
    ases: set[int] = set()
    as_links: set[AsLink] = set()
    records = bundle.records
    n_links = 0
    for i in link_ids:
        n_links += 1
        a, b = records[i].endpoint_a, records[i].endpoint_b
        ips.add(a.ip)
        ips.add(b.ip)
        if a.asn is not None:
            ases.add(a.asn)
        if b.asn is not None:
            ases.add(b.asn)
            if a.asn is not None:
                as_links.add(AsLink(a.asn, b.asn))
    t = bundle.totals
    return ImpactReport(
        cable_segments=ComponentImpact(len(segs), t.cable_segments),
        cables=ComponentImpact(len({s.cable_id for s in segs}), t.cables),
        ip_links=ComponentImpact(n_links, t.ip_links),
        ips=ComponentImpact(len(ips), t.ips),
        as_links=ComponentImpact(len(as_links), t.as_links),
        ases=ComponentImpact(len(ases), t.ases),
    )


def cross_layer_impact(
    impacted: ImpactedSet, maps: EmbeddedMaps, bundle: DatasetBundle, mode: Optional[PredictionMode] = None
) -> ImpactReport:
    """Impact of failed segments on segments, cables, IP links, IPs, AS links and ASes.

    An IP link is impacted when any of its in-use segments (under the maps'
    prediction mode) failed.

    Raises:
        ModeMismatch: ``mode`` differs from the mode the maps were built with.
    """
    _check_mode(maps, mode)
    links = impacted_links(impacted.segments, maps.cs_nc)
    return impact_from_links(impacted.segments, links, bundle)


@dataclass(frozen=True)
class EntityRisk:
    affected: float
    total: int

    @property
    def fraction(self) -> float:
        return self.affected / self.total if self.total else 0.0


@dataclass(frozen=True)
class RiskProfile:
    kind: str
    mode: PredictionMode
    rows: Mapping[Hashable, EntityRisk]

    def fractions(self) -> dict:
        return {e: r.fraction for e, r in self.rows.items()}

    def sorted_rows(self) -> list[tuple[Hashable, EntityRisk]]:
        return sorted(self.rows.items())


def link_contributions(segments: Iterable[CableSegment], cs_map: CsEntityMap) -> dict[int, float]:
    """Per-link loss in [0, 1]: 1 in TOP mode, ``min(1, hits / k)`` in WEIGHTED mode."""
    hits: dict[int, int] = defaultdict(int)
    seg_links = cs_map.segment_links
    for s in set(segments):
        for i in seg_links.get(s, ()):
            hits[i] += 1
    if cs_map.mode is PredictionMode.TOP:
        return {i: 1.0 for i in hits}
    w = cs_map.link_weight
    return {i: min(1.0, h * w[i]) for i, h in hits.items()}


def _affected_by_entity(segments: Iterable[CableSegment], cs_map: CsEntityMap) -> dict[Hashable, set[int]]:
    acc: dict[Hashable, set[int]] = defaultdict(set)
    by_seg = cs_map.by_segment
    for s in set(segments):
        d = by_seg.get(s)
        if not d:
            continue
        for e, ids in d.items():
            acc[e] |= ids
    return acc


def risk_profile(impacted: ImpactedSet, cs_map: CsEntityMap, mode: Optional[PredictionMode] = None) -> RiskProfile:
    """Fraction of each entity's IP links at risk.

    TOP counts distinct affected links; WEIGHTED sums each link's capped share
    of failed predictions. Entities with no links are absent.
    """
    if mode is not None and PredictionMode(mode) is not cs_map.mode:
        raise ModeMismatch(f"map built in {cs_map.mode.value} mode, {PredictionMode(mode).value} requested")
    acc = _affected_by_entity(impacted.segments, cs_map)
    rows: dict[Hashable, EntityRisk] = {}
    if cs_map.mode is PredictionMode.TOP:
        for e, total in cs_map.totals.items():
            rows[e] = EntityRisk(len(acc.get(e, ())), total)
    else:
        contrib = link_contributions(impacted.segments, cs_map)
        for e, total in cs_map.totals.items():
            ids = acc.get(e)
            value = sum(contrib[i] for i in sorted(ids)) if ids else 0.0
            rows[e] = EntityRisk(value, total)
    return RiskProfile(cs_map.kind, cs_map.mode, dict(sorted(rows.items())))


@dataclass(frozen=True)
class InterconnectRow:
    intra_affected: float
    intra_total: int
    inter_affected: float
    inter_total: int

    @property
    def intra_fraction(self) -> float:
        return self.intra_affected / self.intra_total if self.intra_total else 0.0

    @property
    def inter_fraction(self) -> float:
        return self.inter_affected / self.inter_total if self.inter_total else 0.0


@dataclass(frozen=True)
class InterconnectReport:
    mode: PredictionMode
    rows: Mapping[str, InterconnectRow]


_KIND_CACHE: "weakref.WeakKeyDictionary[DatasetBundle, list]" = weakref.WeakKeyDictionary()


def link_kinds(bundle: DatasetBundle) -> list[Optional[LinkKind]]:
    """INTRA/INTER per link id, ``None`` where either ASN is unknown."""
    kinds = _KIND_CACHE.get(bundle)
    if kinds is None:
        kinds = []
        for rec in bundle.records:
            a, b = rec.endpoint_a.asn, rec.endpoint_b.asn
            if a is None or b is None:
                kinds.append(None)
            else:
                kinds.append(LinkKind.INTRA if a == b else LinkKind.INTER)
        _KIND_CACHE[bundle] = kinds
    return kinds


def _country_kind_totals(bundle: DatasetBundle) -> dict[str, list[int]]:
    kinds = link_kinds(bundle)
    totals: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for rec, kind in zip(bundle.records, kinds):
        if kind is None:
            continue
        col = 0 if kind is LinkKind.INTRA else 1
        for c in rec.countries():
            totals[c][col] += 1
    return totals


def intra_inter_impact(impacted: ImpactedSet, cs_nc: CsNcMap, bundle: DatasetBundle) -> InterconnectReport:
    """Per-country affected intra-AS and inter-AS links, normalized per country.

    Links with an unknown ASN on either end are left out of both classes.
    """
    kinds = link_kinds(bundle)
    totals = _country_kind_totals(bundle)
    acc = _affected_by_entity(impacted.segments, cs_nc)
    weighted = cs_nc.mode is PredictionMode.WEIGHTED
    contrib = link_contributions(impacted.segments, cs_nc) if weighted else None
    rows: dict[str, InterconnectRow] = {}
    for c in sorted(totals):
        intra_t, inter_t = totals[c]
        intra_a = inter_a = 0.0 if weighted else 0
        for i in sorted(acc.get(c, ())):
            kind = kinds[i]
            if kind is None:
                continue
            v = contrib[i] if weighted else 1
            if kind is LinkKind.INTRA:
                intra_a += v
            else:
                inter_a += v
        rows[c] = InterconnectRow(intra_a, intra_t, inter_a, inter_t)
    return InterconnectReport(cs_nc.mode, rows)


@dataclass(frozen=True)
class EventProfile:
    impacted: ImpactedSet
    report: ImpactReport
    risk_country: RiskProfile
    risk_asn: RiskProfile
    interconnect: InterconnectReport


def profile(impacted: ImpactedSet, maps: EmbeddedMaps, bundle: DatasetBundle) -> EventProfile:
    return EventProfile(
        impacted,
        cross_layer_impact(impacted, maps, bundle),
        risk_profile(impacted, maps.cs_nc),
        risk_profile(impacted, maps.cs_as),
        intra_inter_impact(impacted, maps.cs_nc, bundle),
    )


def multi_event_profile(
    scenarios: Sequence[Scenario], identifier: Identifier, maps: EmbeddedMaps
) -> EventProfile:
    """Joint profile of several events: union their failed segments, then analyze once."""
    sets = [identifier.identify(s) for s in scenarios]
    return profile(union_events(sets), maps, identifier.bundle)
