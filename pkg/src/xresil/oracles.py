"""Brute-force reference implementations used by the test suite.

Each function scans raw records directly from the definitions and never
touches the embedded maps, so a defect in map construction cannot hide here.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Optional

from .analysis.impact import ComponentImpact, ImpactReport
from .hazard import Direction, EventModel, haversine_km
from .identify import Point
from .ingest import DatasetBundle
from .model import CableSegment, CrossLayerRecord, PredictionMode, Region, RegionKind


def _used(rec: CrossLayerRecord, mode: PredictionMode) -> list[CableSegment]:
    if mode is PredictionMode.TOP:
        return [rec.predictions[0][0]]
    return [s for s, _ in rec.predictions]


def _loss(rec: CrossLayerRecord, failed: set, mode: PredictionMode) -> float:
    used = _used(rec, mode)
    if mode is PredictionMode.TOP:
        return 1.0 if used[0] in failed else 0.0
    total = 0.0
    for s in used:
        if s in failed:
            total += 1.0 / len(used)
    return min(1.0, total)


def _endpoint_countries(rec: CrossLayerRecord) -> set:
    return {e.country for e in rec.endpoints if e.country is not None}


def _endpoint_asns(rec: CrossLayerRecord) -> set:
    return {e.asn for e in rec.endpoints if e.asn is not None}


def oracle_impact(bundle: DatasetBundle, impacted_segments: Iterable[CableSegment], mode=PredictionMode.TOP) -> ImpactReport:
    mode = PredictionMode(mode)
    failed = set(impacted_segments)
    all_segs = list(bundle.segments)
    hit_segs = [s for s in all_segs if s in failed]
    all_ips, hit_ips = set(), set()
    all_ases, hit_ases = set(), set()
    all_al, hit_al = set(), set()
    n_hit = 0
    for rec in bundle.records:
        ips = {rec.endpoint_a.ip, rec.endpoint_b.ip}
        asns = _endpoint_asns(rec)
        al = None
        if rec.endpoint_a.asn is not None and rec.endpoint_b.asn is not None:
            al = tuple(sorted((rec.endpoint_a.asn, rec.endpoint_b.asn)))
        all_ips |= ips
        all_ases |= asns
        if al is not None:
            all_al.add(al)
        if any(s in failed for s in _used(rec, mode)):
            n_hit += 1
            hit_ips |= ips
            hit_ases |= asns
            if al is not None:
                hit_al.add(al)
    return ImpactReport(
        cable_segments=ComponentImpact(len(hit_segs), len(all_segs)),
        cables=ComponentImpact(len({s.cable_id for s in hit_segs}), len({s.cable_id for s in all_segs})),
        ip_links=ComponentImpact(n_hit, len(bundle.records)),
        ips=ComponentImpact(len(hit_ips), len(all_ips)),
        as_links=ComponentImpact(len(hit_al), len(all_al)),
        ases=ComponentImpact(len(hit_ases), len(all_ases)),
    )


def oracle_risk(bundle: DatasetBundle, impacted_segments, mode=PredictionMode.TOP, kind: str = "country") -> dict:
    """entity -> (affected, total)."""
    mode = PredictionMode(mode)
    failed = set(impacted_segments)
    affected: dict = defaultdict(float)
    total: dict = defaultdict(int)
    for rec in bundle.records:
        ents = _endpoint_countries(rec) if kind == "country" else _endpoint_asns(rec)
        loss = _loss(rec, failed, mode)
        for e in ents:
            total[e] += 1
            affected[e] += loss
    return {e: (affected[e], total[e]) for e in sorted(total)}


def oracle_interconnect(bundle: DatasetBundle, impacted_segments, mode=PredictionMode.TOP) -> dict:
    """country -> (intra_affected, intra_total, inter_affected, inter_total)."""
    mode = PredictionMode(mode)
    failed = set(impacted_segments)
    rows: dict = defaultdict(lambda: [0.0, 0, 0.0, 0])
    for rec in bundle.records:
        a, b = rec.endpoint_a.asn, rec.endpoint_b.asn
        if a is None or b is None:
            continue
        col = 0 if a == b else 2
        loss = _loss(rec, failed, mode)
        for c in _endpoint_countries(rec):
            rows[c][col] += loss
            rows[c][col + 1] += 1
    return {c: tuple(v) for c, v in sorted(rows.items())}


def oracle_connectivity(bundle: DatasetBundle, mode=PredictionMode.TOP, kind: str = "country") -> dict:
    """entity -> (segments, cables, stations, p_countries) used by its links."""
    mode = PredictionMode(mode)
    segs_of: dict = defaultdict(set)
    for rec in bundle.records:
        ents = _endpoint_countries(rec) if kind == "country" else _endpoint_asns(rec)
        for e in ents:
            segs_of[e].update(_used(rec, mode))
    out = {}
    for e in sorted(segs_of):
        segs = segs_of[e]
        st = set()
        for s in segs:
            st.add(s.station_a)
            st.add(s.station_b)
        out[e] = (len(segs), len({s.cable_id for s in segs}), len(st), len({bundle.stations[x].country for x in st}))
    return out


def oracle_pc_nc(bundle: DatasetBundle, mode=PredictionMode.TOP) -> dict:
    """(p_country, n_country) -> set of link ids, straight from the definition."""
    mode = PredictionMode(mode)
    out: dict = defaultdict(set)
    for i, rec in enumerate(bundle.records):
        ncs = _endpoint_countries(rec)
        pcs = set()
        for s in _used(rec, mode):
            pcs.add(bundle.stations[s.station_a].country)
            pcs.add(bundle.stations[s.station_b].country)
        for p in pcs:
            for n in ncs:
                out[(p, n)].add(i)
    return dict(out)


def oracle_intra_fraction(bundle: DatasetBundle, mode=PredictionMode.TOP) -> dict:
    mode = PredictionMode(mode)
    intra: dict = defaultdict(int)
    resolvable: dict = defaultdict(int)
    for rec in bundle.records:
        a, b = rec.endpoint_a.asn, rec.endpoint_b.asn
        if a is None or b is None:
            continue
        pcs = set()
        for s in _used(rec, mode):
            pcs.add(bundle.stations[s.station_a].country)
            pcs.add(bundle.stations[s.station_b].country)
        for p in pcs:
            resolvable[p] += 1
            intra[p] += a == b
    return {p: intra[p] / resolvable[p] for p in sorted(resolvable)}


def _nearest_country(bundle: DatasetBundle, lat: float, lon: float) -> Optional[str]:
    best = None
    for sid in sorted(bundle.stations):
        st = bundle.stations[sid]
        d = haversine_km((lat, lon), (st.lat, st.lon))
        if best is None or d < best[0]:
            best = (d, st.country)
    return None if best is None else best[1]


def oracle_candidates(bundle: DatasetBundle, model: EventModel, region: Region) -> list[Point]:
    if model.latitude_rule:
        pts = sorted({(s.lat, s.lon, abs(s.lat)) for s in bundle.stations.values()})
    else:
        pts = model.grid.cells()
    out = []
    for lat, lon, v in pts:
        ok = v >= model.threshold if model.direction is Direction.ABOVE else v <= model.threshold
        if not ok:
            continue
        if region.kind is RegionKind.BBOX and not region.in_bbox(lat, lon):
            continue
        if region.kind is RegionKind.COUNTRIES and _nearest_country(bundle, lat, lon) not in region.countries:
            continue
        out.append((lat, lon, v))
    return sorted(out)


def oracle_identify(bundle: DatasetBundle, model: EventModel, region: Region, probability: float = 1.0) -> set:
    """Failed segments for the deterministic TOP_N strategy, by brute force."""
    cands = oracle_candidates(bundle, model, region)
    k = 0 if not cands else min(len(cands), max(1, math.ceil(probability * len(cands) - 1e-9)))
    sign = 1.0 if model.direction is Direction.ABOVE else -1.0
    chosen = sorted(cands, key=lambda c: (-sign * c[2], c[0], c[1]))[:k]
    at_risk = set()
    for sid, st in bundle.stations.items():
        for lat, lon, _ in chosen:
            if haversine_km((lat, lon), (st.lat, st.lon)) <= model.probe_km:
                at_risk.add(sid)
                break
    return {s for s in bundle.segments if s.station_a in at_risk or s.station_b in at_risk}


def oracle_inclusion_probabilities(weights, k: int) -> list[float]:
    """Exact inclusion probability of each item under k sequential proportional draws.

    Enumerates every ordered draw sequence; only meant for a handful of items.
    """
    w = [float(x) for x in weights]
    n = len(w)
    incl = [0.0] * n

    def walk(chosen: tuple, prob: float) -> None:
        if len(chosen) == k:
            for i in chosen:
                incl[i] += prob
            return
        rest = sum(w[i] for i in range(n) if i not in chosen)
        for i in range(n):
            if i not in chosen:
                walk(chosen + (i,), prob * w[i] / rest)

    walk((), 1.0)
    return incl


def oracle_sensitivity_expectation(bundle: DatasetBundle, impacted_segments, mix) -> tuple[float, float]:
    """Exact mean and per-round standard deviation of the ip_links fraction under a mapping-error mix.

    A link whose top prediction failed stays impacted with probability
    ``t + s * q``, where ``q`` is the share of its non-top predictions that
    failed (``q = 1`` for single-prediction links). Links are independent, so
    the per-round count is a sum of Bernoulli variables.
    """
    failed = set(impacted_segments)
    t, s = mix.top / 100.0, mix.secondary / 100.0
    mean = var = 0.0
    for r in bundle.records:
        if r.predictions[0][0] not in failed:
            continue
        others = [seg for seg, _ in r.predictions[1:]]
        q = 1.0 if not others else sum(seg in failed for seg in others) / len(others)
        p = t + s * q
        mean += p
        var += p * (1.0 - p)
    n = len(bundle.records)
    if n == 0:
        return 0.0, 0.0
    return mean / n, math.sqrt(var) / n
