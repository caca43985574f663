"""Domain types shared by every stage of the pipeline.

All types are frozen dataclasses. Unknown geolocation or ASN is carried as
``None`` and is excluded from country/AS aggregations downstream.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import DataError, DegenerateSegment, RangeError

_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")


def is_country_code(code: object) -> bool:
    return isinstance(code, str) and _COUNTRY_RE.match(code) is not None


def check_lat_lon(lat: float, lon: float) -> None:
    if not -90.0 <= lat <= 90.0:
        raise RangeError(f"latitude {lat} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise RangeError(f"longitude {lon} outside [-180, 180]")


class PredictionMode(str, enum.Enum):
    """Which cable predictions of a record are considered in use."""

    TOP = "top"
    WEIGHTED = "weighted"


class LinkKind(str, enum.Enum):
    INTRA = "intra"
    INTER = "inter"


@dataclass(frozen=True, slots=True)
class LandingStation:
    id: str
    lat: float
    lon: float
    country: str

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("landing station id must be non-empty")
        check_lat_lon(self.lat, self.lon)
        if not is_country_code(self.country):
            raise DataError(f"station {self.id!r}: invalid country code {self.country!r}")


@dataclass(frozen=True, slots=True, order=True)
class CableSegment:
    """A (cable, landing station, landing station) tuple.

    The two station ids are stored sorted, so ``CableSegment("C", "B", "A")``
    and ``CableSegment("C", "A", "B")`` compare and hash equal.
    """

    cable_id: str
    station_a: str
    station_b: str

    def __post_init__(self) -> None:
        if self.station_a == self.station_b:
            raise DegenerateSegment(self.cable_id, self.station_a)
        if self.station_b < self.station_a:
            a, b = self.station_b, self.station_a
            object.__setattr__(self, "station_a", a)
            object.__setattr__(self, "station_b", b)

    @property
    def stations(self) -> tuple[str, str]:
        return (self.station_a, self.station_b)

    def touches(self, station_ids) -> bool:
        return self.station_a in station_ids or self.station_b in station_ids

    def __str__(self) -> str:
        return f"{self.cable_id}:{self.station_a}-{self.station_b}"


def canonicalize_segment(cable_id: str, sa: str, sb: str) -> CableSegment:
    """Return the segment with its landing stations in lexicographic order.

    Raises:
        DegenerateSegment: if ``sa == sb``.
    """
    return CableSegment(cable_id, sa, sb)


@dataclass(frozen=True, slots=True)
class IpEndpoint:
    ip: str
    country: Optional[str] = None
    asn: Optional[int] = None
    lat: Optional[float] = None
    lon: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.lat is None) != (self.lon is None):
            raise DataError(f"endpoint {self.ip}: lat and lon must be given together")
        if self.lat is not None:
            check_lat_lon(self.lat, self.lon)
        if self.asn is not None and self.asn <= 0:
            raise DataError(f"endpoint {self.ip}: asn must be positive (0 means unknown)")
        if self.country is not None and not is_country_code(self.country):
            raise DataError(f"endpoint {self.ip}: invalid country code {self.country!r}")


Prediction = tuple[CableSegment, float]


def sort_predictions(predictions: Iterable[Prediction]) -> tuple[Prediction, ...]:
    """Order predictions by descending score, ties by segment identity."""
    return tuple(sorted(predictions, key=lambda p: (-p[1], p[0])))


@dataclass(frozen=True, slots=True)
class CrossLayerRecord:
    """One IP link with its ranked cable-segment predictions."""

    endpoint_a: IpEndpoint
    endpoint_b: IpEndpoint
    predictions: tuple[Prediction, ...]

    def __post_init__(self) -> None:
        preds = self.predictions
        if not preds:
            raise DataError("record has no predictions")
        if len(preds) > 1:
            seen = set()
            prev = None
            for seg, score in preds:
                if seg in seen:
                    raise DataError(f"duplicate prediction {seg}")
                seen.add(seg)
                if prev is not None and (-score, seg) < prev:
                    raise DataError("predictions must be sorted by (score desc, segment)")
                prev = (-score, seg)
        for _, score in preds:
            if not 0.0 <= score <= 1.0:
                raise RangeError(f"prediction score {score} outside [0, 1]")
        if self.endpoint_a.ip == self.endpoint_b.ip:
            raise DataError(f"link endpoints share ip {self.endpoint_a.ip}")

    @property
    def key(self) -> tuple[str, str]:
        """Order-insensitive link identity."""
        a, b = self.endpoint_a.ip, self.endpoint_b.ip
        return (a, b) if a <= b else (b, a)

    @property
    def top(self) -> CableSegment:
        return self.predictions[0][0]

    @property
    def segments(self) -> tuple[CableSegment, ...]:
        return tuple(seg for seg, _ in self.predictions)

    def active_segments(self, mode: PredictionMode) -> tuple[CableSegment, ...]:
        if mode is PredictionMode.TOP:
            return (self.predictions[0][0],)
        return self.segments

    @property
    def endpoints(self) -> tuple[IpEndpoint, IpEndpoint]:
        return (self.endpoint_a, self.endpoint_b)

    def countries(self) -> frozenset[str]:
        return frozenset(c for c in (self.endpoint_a.country, self.endpoint_b.country) if c is not None)

    def asns(self) -> frozenset[int]:
        return frozenset(a for a in (self.endpoint_a.asn, self.endpoint_b.asn) if a is not None)


@dataclass(frozen=True, slots=True)
class AsLink:
    asn_a: int
    asn_b: int

    def __post_init__(self) -> None:
        if self.asn_b < self.asn_a:
            a, b = self.asn_b, self.asn_a
            object.__setattr__(self, "asn_a", a)
            object.__setattr__(self, "asn_b", b)

    @property
    def kind(self) -> LinkKind:
        return LinkKind.INTRA if self.asn_a == self.asn_b else LinkKind.INTER


def as_link_of(record: CrossLayerRecord) -> Optional[AsLink]:
    """AS link of an IP link, or ``None`` when either ASN is unknown."""
    a, b = record.endpoint_a.asn, record.endpoint_b.asn
    if a is None or b is None:
        return None
    return AsLink(a, b)


class RegionKind(str, enum.Enum):
    GLOBAL = "global"
    COUNTRIES = "countries"
    BBOX = "bbox"


@dataclass(frozen=True)
class Region:
    kind: RegionKind = RegionKind.GLOBAL
    countries: frozenset[str] = field(default_factory=frozenset)
    bbox: Optional[tuple[float, float, float, float]] = None

    def __post_init__(self) -> None:
        if self.kind is RegionKind.COUNTRIES:
            if not self.countries:
                raise DataError("COUNTRIES region needs at least one country")
            bad = [c for c in self.countries if not is_country_code(c)]
            if bad:
                raise DataError(f"invalid country codes in region: {sorted(bad)}")
        elif self.kind is RegionKind.BBOX:
            if self.bbox is None or len(self.bbox) != 4:
                raise DataError("BBOX region needs (lat_min, lat_max, lon_min, lon_max)")
            lat_min, lat_max, lon_min, lon_max = self.bbox
            check_lat_lon(lat_min, lon_min)
            check_lat_lon(lat_max, lon_max)
            if lat_min > lat_max or lon_min > lon_max:
                raise DataError(f"BBOX bounds not ordered: {self.bbox}")

    @classmethod
    def global_(cls) -> "Region":
        return cls()

    @classmethod
    def of_countries(cls, countries: Iterable[str]) -> "Region":
        return cls(RegionKind.COUNTRIES, countries=frozenset(countries))

    @classmethod
    def box(cls, lat_min: float, lat_max: float, lon_min: float, lon_max: float) -> "Region":
        return cls(RegionKind.BBOX, bbox=(lat_min, lat_max, lon_min, lon_max))

    def in_bbox(self, lat: float, lon: float) -> bool:
        lat_min, lat_max, lon_min, lon_max = self.bbox
        return lat_min <= lat <= lat_max and lon_min <= lon <= lon_max
