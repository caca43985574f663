"""Parsing and serialization of the on-disk dataset formats.

Formats:

* ``stations.csv``: ``id,lat,lon,country``
* ``segments.csv``: ``cable,station_a,station_b`` (optional universe of segments)
* ``crosslayer.jsonl``: one IP link per line, see :func:`load_cross_layer_map`
* ``grid_<name>.csv``: ``lat,lon,value``
"""

from __future__ import annotations

import csv
import io
import ipaddress
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .errors import DataError, DuplicateStation, EmptyPredictions, ParseError, RangeError
from .hazard import IntensityGrid, snap
from .model import (
    CableSegment,
    CrossLayerRecord,
    IpEndpoint,
    LandingStation,
    as_link_of,
    sort_predictions,
)

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

STATION_HEADER = ["id", "lat", "lon", "country"]
SEGMENT_HEADER = ["cable", "station_a", "station_b"]
GRID_HEADER = ["lat", "lon", "value"]


@dataclass
class LoadSummary:
    """Per-file counts of rows that were dropped instead of failing the load."""

    dropped: Counter = field(default_factory=Counter)

    def add(self, reason: str, n: int = 1) -> None:
        self.dropped[reason] += n

    @property
    def total(self) -> int:
        return sum(self.dropped.values())


@dataclass(frozen=True)
class Totals:
    cable_segments: int
    cables: int
    ip_links: int
    ips: int
    as_links: int
    ases: int


@dataclass(frozen=True, eq=False)
class DatasetBundle:
    """Stations, segment universe, cross-layer records and hazard grids.

    Link ids used throughout the package are indices into ``records``; records
    are kept sorted by their order-insensitive ip-pair key.
    """

    stations: Mapping[str, LandingStation]
    records: tuple[CrossLayerRecord, ...]
    segments: tuple[CableSegment, ...] = ()
    grids: Mapping[str, IntensityGrid] = field(default_factory=dict)

    def __post_init__(self) -> None:
        universe = set(self.segments)
        for rec in self.records:
            for seg, _ in rec.predictions:
                if seg not in universe:
                    universe.add(seg)
        for seg in universe:
            for sid in seg.stations:
                if sid not in self.stations:
                    raise DataError(f"segment {seg} references unknown station {sid!r}")
        object.__setattr__(self, "segments", tuple(sorted(universe)))

    @cached_property
    def totals(self) -> Totals:
        ips: set[str] = set()
        as_links = set()
        ases: set[int] = set()
        for rec in self.records:
            a, b = rec.endpoint_a, rec.endpoint_b
            ips.add(a.ip)
            ips.add(b.ip)
            if a.asn is not None:
                ases.add(a.asn)
            if b.asn is not None:
                ases.add(b.asn)
            al = as_link_of(rec)
            if al is not None:
                as_links.add(al)
        return Totals(
            cable_segments=len(self.segments),
            cables=len({s.cable_id for s in self.segments}),
            ip_links=len(self.records),
            ips=len(ips),
            as_links=len(as_links),
            ases=len(ases),
        )

    @cached_property
    def segment_set(self) -> frozenset[CableSegment]:
        return frozenset(self.segments)

    @cached_property
    def segments_by_station(self) -> dict[str, tuple[CableSegment, ...]]:
        out: dict[str, list[CableSegment]] = {}
        for seg in self.segments:
            out.setdefault(seg.station_a, []).append(seg)
            out.setdefault(seg.station_b, []).append(seg)
        return {k: tuple(v) for k, v in out.items()}


def _open_csv(path: PathLike, header: list[str]):
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.reader(fh)
    try:
        first = next(reader)
    except StopIteration:
        fh.close()
        raise ParseError(1, "empty file, expected header " + ",".join(header), str(path)) from None
    if [c.strip() for c in first] != header:
        fh.close()
        raise ParseError(1, f"expected header {','.join(header)!r}, got {','.join(first)!r}", str(path))
    return fh, reader


def load_stations(path: PathLike) -> dict[str, LandingStation]:
    """Read the landing-station registry.

    Raises:
        ParseError: malformed rows.
        RangeError: coordinates out of range.
        DuplicateStation: repeated station id.
    """
    stations: dict[str, LandingStation] = {}
    fh, reader = _open_csv(path, STATION_HEADER)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(lineno, f"expected 4 fields, got {len(row)}", str(path))
            sid, lat_s, lon_s, country = (c.strip() for c in row)
            try:
                lat, lon = float(lat_s), float(lon_s)
            except ValueError:
                raise ParseError(lineno, f"non-numeric coordinate in {row!r}", str(path)) from None
            if sid in stations:
                raise DuplicateStation(sid)
            try:
                stations[sid] = LandingStation(sid, lat, lon, country)
            except RangeError as exc:
                raise RangeError(f"{path}:{lineno}: {exc}") from None
            except DataError as exc:
                raise ParseError(lineno, str(exc), str(path)) from None
    return stations


def load_segments(
    path: PathLike, stations: Mapping[str, LandingStation], summary: Optional[LoadSummary] = None
) -> list[CableSegment]:
    segments: set[CableSegment] = set()
    fh, reader = _open_csv(path, SEGMENT_HEADER)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(lineno, f"expected 3 fields, got {len(row)}", str(path))
            cable, sa, sb = (c.strip() for c in row)
            try:
                seg = CableSegment(cable, sa, sb)
            except DataError as exc:
                raise ParseError(lineno, str(exc), str(path)) from None
            if sa not in stations or sb not in stations:
                log.warning("%s:%d: segment %s references an unknown station; dropped", path, lineno, seg)
                if summary is not None:
                    summary.add("unknown_station")
                continue
            segments.add(seg)
    return sorted(segments)


def _canonical_ip(text: str) -> str:
    return str(ipaddress.ip_address(text))


def _parse_endpoint(obj: dict) -> IpEndpoint:
    if not isinstance(obj, dict) or "ip" not in obj:
        raise ValueError("endpoint must be an object with an 'ip' field")
    asn = obj.get("asn")
    if asn is not None:
        if isinstance(asn, bool) or not isinstance(asn, int) or asn < 0:
            raise ValueError(f"asn must be a non-negative integer, got {asn!r}")
        if asn == 0:
            asn = None
    lat, lon = obj.get("lat"), obj.get("lon")
    if lat is not None:
        lat = float(lat)
    if lon is not None:
        lon = float(lon)
    return IpEndpoint(_canonical_ip(obj["ip"]), obj.get("country"), asn, lat, lon)


def parse_record_line(
    line: str,
    stations: Mapping[str, LandingStation],
    lineno: int = 0,
    path: Optional[str] = None,
    intern: Optional[dict] = None,
) -> Optional[CrossLayerRecord]:
    """Parse one JSONL line; ``None`` if it references an unknown station."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(lineno, f"invalid JSON: {exc.msg}", path) from None
    if not isinstance(obj, dict):
        raise ParseError(lineno, "record must be a JSON object", path)
    preds = obj.get("pred")
    if not isinstance(preds, list):
        raise ParseError(lineno, "missing 'pred' list", path)
    if not preds:
        raise EmptyPredictions(lineno, path)
    intern = {} if intern is None else intern
    try:
        a = _parse_endpoint(obj.get("a"))
        b = _parse_endpoint(obj.get("b"))
        best: dict[CableSegment, float] = {}
        unknown = False
        for p in preds:
            key = (p["cable"], p["sa"], p["sb"])
            seg = intern.get(key)
            if seg is None:
                seg = CableSegment(str(p["cable"]), str(p["sa"]), str(p["sb"]))
                intern[key] = seg
            if seg.station_a not in stations or seg.station_b not in stations:
                unknown = True
            score = float(p["score"])
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"score {score} outside [0, 1]")
            if seg not in best or score > best[seg]:
                best[seg] = score
        if unknown:
            return None
        return CrossLayerRecord(a, b, sort_predictions(best.items()))
    except (KeyError, TypeError, ValueError, DataError) as exc:
        raise ParseError(lineno, f"{type(exc).__name__}: {exc}", path) from None


def load_cross_layer_map(
    path: PathLike, stations: Mapping[str, LandingStation], summary: Optional[LoadSummary] = None
) -> list[CrossLayerRecord]:
    """Read the cross-layer map (IP links with ranked cable-segment predictions).

    Each line is ``{"a": {...}, "b": {...}, "pred": [{"cable", "sa", "sb", "score"}, ...]}``
    where an endpoint is ``{"ip", "country", "asn", "lat", "lon"}`` and all but
    ``ip`` are nullable. Records naming unknown stations are dropped and counted
    in ``summary``; duplicate links keep a single, input-order-independent copy.

    Raises:
        ParseError: malformed line.
        EmptyPredictions: a line with an empty ``pred`` list.
    """
    records: list[CrossLayerRecord] = []
    intern: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = parse_record_line(line, stations, lineno, str(path), intern)
            if rec is None:
                log.warning("%s:%d: record references an unknown landing station; dropped", path, lineno)
                if summary is not None:
                    summary.add("unknown_station")
                continue
            records.append(rec)
    return normalize_records(records, summary)


def normalize_records(
    records: Iterable[CrossLayerRecord], summary: Optional[LoadSummary] = None
) -> list[CrossLayerRecord]:
    """Sort by link key and collapse duplicate links deterministically."""
    by_key: dict[tuple[str, str], CrossLayerRecord] = {}
    dup = 0
    for rec in records:
        k = rec.key
        old = by_key.get(k)
        if old is None:
            by_key[k] = rec
            continue
        dup += 1
        if record_line(rec) < record_line(old):
            by_key[k] = rec
    if dup:
        log.warning("collapsed %d duplicate IP links", dup)
        if summary is not None:
            summary.add("duplicate_link", dup)
    return [by_key[k] for k in sorted(by_key)]


def load_intensity_grid(path: PathLike, units: str = "", resolution_deg: float = 0.1) -> IntensityGrid:
    """Read a ``lat,lon,value`` grid; duplicate cells keep the maximum value.

    Raises:
        ParseError: malformed rows or coordinates off the resolution lattice.
        RangeError: coordinates outside the valid range.
    """
    rows: list[tuple[float, float, float]] = []
    fh, reader = _open_csv(path, GRID_HEADER)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(lineno, f"expected 3 fields, got {len(row)}", str(path))
            try:
                lat, lon, value = (float(c) for c in row)
            except ValueError:
                raise ParseError(lineno, f"non-numeric field in {row!r}", str(path)) from None
            try:
                snap(lat, lon, resolution_deg)
            except RangeError as exc:
                raise RangeError(f"{path}:{lineno}: {exc}") from None
            except DataError as exc:
                raise ParseError(lineno, str(exc), str(path)) from None
            rows.append((lat, lon, value))
    return IntensityGrid.from_cells(rows, resolution_deg, units)


def load_bundle(
    stations_path: PathLike,
    crosslayer_path: PathLike,
    segments_path: Optional[PathLike] = None,
    grids: Optional[Mapping[str, IntensityGrid]] = None,
    summary: Optional[LoadSummary] = None,
) -> DatasetBundle:
    stations = load_stations(stations_path)
    segments = load_segments(segments_path, stations, summary) if segments_path else []
    records = load_cross_layer_map(crosslayer_path, stations, summary)
    return DatasetBundle(stations, tuple(records), tuple(segments), dict(grids or {}))


# -- serialization -------------------------------------------------------------


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def dump_stations(stations: Mapping[str, LandingStation], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATION_HEADER)
        for sid in sorted(stations):
            s = stations[sid]
            w.writerow([s.id, _fmt(s.lat), _fmt(s.lon), s.country])


def dump_segments(segments: Iterable[CableSegment], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEGMENT_HEADER)
        for seg in sorted(segments):
            w.writerow([seg.cable_id, seg.station_a, seg.station_b])


def _endpoint_obj(e: IpEndpoint) -> dict:
    return {"ip": e.ip, "country": e.country, "asn": e.asn, "lat": e.lat, "lon": e.lon}


def record_line(rec: CrossLayerRecord) -> str:
    """Canonical JSONL serialization of one record (no trailing newline)."""
    obj = {
        "a": _endpoint_obj(rec.endpoint_a),
        "b": _endpoint_obj(rec.endpoint_b),
        "pred": [
            {"cable": s.cable_id, "sa": s.station_a, "sb": s.station_b, "score": score}
            for s, score in rec.predictions
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def dump_cross_layer_map(records: Iterable[CrossLayerRecord], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_line(rec))
            fh.write("\n")


def dump_grid(grid: IntensityGrid, path: PathLike) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_HEADER)
    for lat, lon, value in grid.cells():
        w.writerow([repr(lat), repr(lon), repr(value)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
