"""Failed cable identification.

threshold filter -> region clip -> sample -> probe landing stations -> segments,
plus manual failures and the union of several events.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, UnknownId
from .hazard import EARTH_RADIUS_KM, Direction, EventModel, haversine_km, severity
from .ingest import DatasetBundle, PathLike
from .model import CableSegment, LandingStation, Region, RegionKind

Point = tuple[float, float, float]  # (lat, lon, intensity)


class Strategy(str, enum.Enum):
    RANDOM = "random"
    TOP_N = "top_n"
    WEIGHTED = "weighted"

    @classmethod
    def parse(cls, text) -> "Strategy":
        if isinstance(text, cls):
            return text
        t = str(text).strip().lower().replace("-", "_")
        return cls({"top": "top_n", "topn": "top_n"}.get(t, t))


@dataclass(frozen=True)
class FailureDistribution:
    probability: float = 1.0
    strategy: Strategy = Strategy.TOP_N
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.probability <= 1.0:
            raise DataError(f"failure probability must be in (0, 1], got {self.probability}")
        if self.strategy is not Strategy.TOP_N and self.seed is None:
            raise DataError(f"{self.strategy.value} sampling needs a seed")


@dataclass(frozen=True)
class ImpactedSet:
    segments: frozenset[CableSegment] = frozenset()
    stations: frozenset[str] = frozenset()
    sampled_points: tuple[Point, ...] = ()

    def __post_init__(self) -> None:
        for seg in self.segments:
            if seg.station_a not in self.stations and seg.station_b not in self.stations:
                raise DataError(f"impacted segment {seg} touches no impacted station")

    def sorted_segments(self) -> list[CableSegment]:
        return sorted(self.segments)


# -- region membership -----------------------------------------------------------


def _unit_vectors(lats, lons) -> np.ndarray:
    la = np.radians(np.asarray(lats, dtype=np.float64))
    lo = np.radians(np.asarray(lons, dtype=np.float64))
    c = np.cos(la)
    return np.column_stack((c * np.cos(lo), c * np.sin(lo), np.sin(la)))


def _chord(km: float) -> float:
    return 2.0 * math.sin(min(math.pi, km / EARTH_RADIUS_KM) / 2.0)


class StationIndex:
    """Spatial index over landing stations (KD-tree on unit vectors)."""

    def __init__(self, stations: Mapping[str, LandingStation]):
        self.ids = sorted(stations)
        self.stations = stations
        self.lats = np.array([stations[i].lat for i in self.ids], dtype=np.float64)
        self.lons = np.array([stations[i].lon for i in self.ids], dtype=np.float64)
        self.tree = cKDTree(_unit_vectors(self.lats, self.lons)) if self.ids else None

    def within(self, points: Sequence[tuple[float, float]], km: float) -> set[str]:
        """Ids of stations within ``km`` (haversine, inclusive) of any point."""
        if not points or self.tree is None:
            return set()
        xyz = _unit_vectors([p[0] for p in points], [p[1] for p in points])
        radius = _chord(km) * (1.0 + 1e-6) + 1e-12
        hits: set[str] = set()
        for (lat, lon), cand in zip(((p[0], p[1]) for p in points), self.tree.query_ball_point(xyz, radius)):
            for k in cand:
                sid = self.ids[k]
                if sid in hits:
                    continue
                if haversine_km((lat, lon), (self.lats[k], self.lons[k])) <= km:
                    hits.add(sid)
        return hits

    def nearest_country(self, lats, lons) -> list[Optional[str]]:
        if self.tree is None:
            return [None] * len(lats)
        _, idx = self.tree.query(_unit_vectors(lats, lons))
        return [self.stations[self.ids[k]].country for k in np.atleast_1d(idx)]


class PolygonLocator:
    """Point-in-country lookup from a GeoJSON FeatureCollection.

    Each feature needs an ISO alpha-2 code in its ``iso_a2`` (or ``country``)
    property. Requires shapely.
    """

    def __init__(self, path: PathLike):
        from shapely.geometry import shape
        from shapely.strtree import STRtree

        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        geoms, codes = [], []
        for feat in doc.get("features", []):
            props = feat.get("properties") or {}
            code = props.get("iso_a2") or props.get("country")
            if not code:
                continue
            geoms.append(shape(feat["geometry"]))
            codes.append(str(code).upper())
        self.codes = codes
        self.geoms = geoms
        self.tree = STRtree(geoms)

    def countries(self, lats, lons) -> list[Optional[str]]:
        from shapely.geometry import Point as SPoint

        out: list[Optional[str]] = []
        for lat, lon in zip(lats, lons):
            p = SPoint(float(lon), float(lat))
            found = None
            for k in sorted(int(i) for i in self.tree.query(p)):
                if self.geoms[k].covers(p):
                    found = self.codes[k]
                    break
            out.append(found)
        return out


def region_mask(region: Region, lats: np.ndarray, lons: np.ndarray, locator=None) -> np.ndarray:
    """Boolean mask of points inside ``region``.

    COUNTRIES membership uses ``locator`` (a :class:`PolygonLocator` or
    :class:`StationIndex`); with a station index the point takes the country of
    its nearest landing station.
    """
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if region.kind is RegionKind.GLOBAL:
        return np.ones(lats.shape[0], dtype=bool)
    if region.kind is RegionKind.BBOX:
        lat_min, lat_max, lon_min, lon_max = region.bbox
        return (lats >= lat_min) & (lats <= lat_max) & (lons >= lon_min) & (lons <= lon_max)
    if locator is None:
        raise DataError("COUNTRIES region needs a country locator")
    if lats.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if isinstance(locator, StationIndex):
        codes = locator.nearest_country(lats, lons)
    else:
        codes = locator.countries(lats, lons)
    return np.array([c in region.countries for c in codes], dtype=bool)


# -- workflow stages -----------------------------------------------------------


def candidate_points(
    model: EventModel,
    region: Region,
    stations: Optional[Mapping[str, LandingStation]] = None,
    locator=None,
) -> list[Point]:
    """Locations whose intensity passes the threshold and that lie in ``region``.

    For the latitude rule the locations are the landing stations themselves.
    Output is sorted by (lat, lon).
    """
    if model.latitude_rule:
        if stations is None:
            raise DataError("latitude-rule models need the station registry")
        coords = sorted({(s.lat, s.lon) for s in stations.values()})
        lats = np.array([c[0] for c in coords], dtype=np.float64)
        lons = np.array([c[1] for c in coords], dtype=np.float64)
        values = np.abs(lats)
    else:
        lats, lons, values = model.grid.lats, model.grid.lons, model.grid.values
    if model.direction is Direction.ABOVE:
        mask = values >= model.threshold
    else:
        mask = values <= model.threshold
    idx = np.flatnonzero(mask)
    if idx.size and region.kind is not RegionKind.GLOBAL:
        idx = idx[region_mask(region, lats[idx], lons[idx], locator)]
    return list(zip(lats[idx].tolist(), lons[idx].tolist(), values[idx].tolist()))


def sample_size(probability: float, n: int) -> int:
    """``ceil(p * n)``; a float product within 1e-9 of an integer is taken as that integer."""
    if n == 0:
        return 0
    return min(n, max(1, math.ceil(probability * n - 1e-9)))


def sample_points(
    candidates: Sequence[Point],
    distribution: FailureDistribution,
    model: Optional[EventModel] = None,
) -> list[Point]:
    """Pick ``ceil(p * N)`` candidates according to the sampling strategy.

    TOP_N takes the most severe points (ties by (lat, lon)); RANDOM draws
    uniformly without replacement; WEIGHTED draws without replacement with
    probability proportional to severity at each draw. Severity is the raw
    intensity for ABOVE models and the depth below threshold for BELOW models.
    The result is sorted by (lat, lon).
    """
    n = len(candidates)
    k = sample_size(distribution.probability, n)
    if k == 0:
        return []
    if k == n:
        return sorted(candidates)
    inten = np.array([c[2] for c in candidates], dtype=np.float64)
    sev = severity(model, inten) if model is not None else inten
    strategy = distribution.strategy
    if strategy is Strategy.TOP_N:
        order = sorted(range(n), key=lambda i: (-sev[i], candidates[i][0], candidates[i][1]))
        chosen = order[:k]
    else:
        # candidates are drawn in (lat, lon) order so the seed alone fixes the outcome
        base = sorted(range(n), key=lambda i: (candidates[i][0], candidates[i][1]))
        rng = np.random.default_rng(distribution.seed)
        if strategy is Strategy.RANDOM:
            chosen = [base[i] for i in rng.choice(n, size=k, replace=False)]
        else:
            w = sev[base]
            pos = w[w > 0]
            floor = (pos.min() if pos.size else 1.0) * 1e-9
            w = np.where(w > 0, w, floor)
            # exponential race: the k smallest E_i / w_i have the law of k
            # sequential proportional draws without replacement
            keys = rng.exponential(size=n) / w
            chosen = [base[i] for i in np.argsort(keys, kind="stable")[:k]]
    return sorted(candidates[i] for i in chosen)


def at_risk_stations(
    sampled: Sequence[Point],
    stations: Mapping[str, LandingStation],
    probe_km: float,
    index: Optional[StationIndex] = None,
) -> set[str]:
    """Stations within ``probe_km`` of at least one sampled point."""
    index = index if index is not None else StationIndex(stations)
    return index.within([(p[0], p[1]) for p in sampled], probe_km)


def impacted_segments(
    stations: Iterable[str],
    segment_universe: Iterable[CableSegment],
    by_station: Optional[Mapping[str, Sequence[CableSegment]]] = None,
) -> ImpactedSet:
    """All segments with a landing station in ``stations``."""
    stations = frozenset(stations)
    if by_station is not None:
        segs = {s for sid in stations for s in by_station.get(sid, ())}
    else:
        segs = {s for s in segment_universe if s.station_a in stations or s.station_b in stations}
    return ImpactedSet(frozenset(segs), stations)


def union_events(sets: Sequence[ImpactedSet]) -> ImpactedSet:
    if not sets:
        raise DataError("union_events needs at least one impacted set")
    segs: set[CableSegment] = set()
    stations: set[str] = set()
    points: set[Point] = set()
    for s in sets:
        segs |= s.segments
        stations |= s.stations
        points.update(s.sampled_points)
    return ImpactedSet(frozenset(segs), frozenset(stations), tuple(sorted(points)))


@dataclass(frozen=True)
class ManualFailure:
    """Explicitly named failures.

    ``cables`` fails every segment of a cable; ``cable_segments`` restricts a
    cable to listed station pairs (e.g. only the stretch a cut must cross).
    """

    segments: tuple[CableSegment, ...] = ()
    stations: tuple[str, ...] = ()
    cables: tuple[str, ...] = ()
    cable_segments: Mapping[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not (self.segments or self.stations or self.cables or self.cable_segments)


def manual_failure(spec: ManualFailure, bundle: DatasetBundle) -> ImpactedSet:
    """Resolve named segments, stations and cables against the bundle.

    Raises:
        UnknownId: a name that does not resolve.
    """
    universe = set(bundle.segments)
    by_station = bundle.segments_by_station
    segs: set[CableSegment] = set()
    stations: set[str] = set()
    for seg in spec.segments:
        if seg not in universe:
            raise UnknownId("segment", str(seg))
        segs.add(seg)
        stations.update(seg.stations)
    for sid in spec.stations:
        if sid not in bundle.stations:
            raise UnknownId("station", sid)
        stations.add(sid)
        segs.update(by_station.get(sid, ()))
    by_cable: dict[str, list[CableSegment]] = {}
    for seg in bundle.segments:
        by_cable.setdefault(seg.cable_id, []).append(seg)
    for cable in spec.cables:
        if cable not in by_cable:
            raise UnknownId("cable", cable)
        for seg in by_cable[cable]:
            segs.add(seg)
            stations.update(seg.stations)
    for cable, pairs in spec.cable_segments.items():
        if cable not in by_cable:
            raise UnknownId("cable", cable)
        for sa, sb in pairs:
            seg = CableSegment(cable, sa, sb)
            if seg not in universe:
                raise UnknownId("segment", str(seg))
            segs.add(seg)
            stations.update(seg.stations)
    return ImpactedSet(frozenset(segs), frozenset(stations))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Event model, failure distribution and region, optionally with manual failures."""

    model: Optional[EventModel] = None
    distribution: FailureDistribution = FailureDistribution()
    region: Region = Region()
    manual: ManualFailure = ManualFailure()
    name: str = ""


class Identifier:
    """Runs scenarios against one bundle, reusing spatial indexes."""

    def __init__(self, bundle: DatasetBundle, locator=None):
        self.bundle = bundle
        self.index = StationIndex(bundle.stations)
        self.locator = locator if locator is not None else self.index
        self._candidates: dict[tuple[EventModel, Region], list[Point]] = {}

    def candidates(self, model: EventModel, region: Region) -> list[Point]:
        key = (model, region)
        if key not in self._candidates:
            self._candidates[key] = candidate_points(model, region, self.bundle.stations, self.locator)
        return self._candidates[key]

    def from_sample(self, model: EventModel, sampled: Sequence[Point]) -> ImpactedSet:
        stations = at_risk_stations(sampled, self.bundle.stations, model.probe_km, self.index)
        hit = impacted_segments(stations, self.bundle.segments, self.bundle.segments_by_station)
        return ImpactedSet(hit.segments, hit.stations, tuple(sampled))

    def identify(self, scenario: Scenario, distribution: Optional[FailureDistribution] = None) -> ImpactedSet:
        parts = []
        if scenario.model is not None:
            dist = distribution or scenario.distribution
            cands = self.candidates(scenario.model, scenario.region)
            sampled = sample_points(cands, dist, scenario.model)
            parts.append(self.from_sample(scenario.model, sampled))
        if not scenario.manual.empty:
            parts.append(manual_failure(scenario.manual, self.bundle))
        if not parts:
            return ImpactedSet()
        return parts[0] if len(parts) == 1 else union_events(parts)


def identify(scenario: Scenario, bundle: DatasetBundle, locator=None) -> ImpactedSet:
    return Identifier(bundle, locator).identify(scenario)
