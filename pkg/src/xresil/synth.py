"""Deterministic synthetic worlds in the ingestion formats.

A world has countries (some landlocked), landing stations near country
centres, multi-segment cables, groups of parallel cables sharing one station
pair, a pool of IPs with country/ASN attributes and IP links whose
predictions follow the cable layout. One sparse intensity grid carries the
configured hazard hot spots.
"""

from __future__ import annotations

import itertools
import json
import math
import string
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import SpecError
from .hazard import IntensityGrid, haversine_km
from .ingest import (
    DatasetBundle,
    PathLike,
    dump_cross_layer_map,
    dump_grid,
    dump_segments,
    dump_stations,
)
from .model import CableSegment, CrossLayerRecord, IpEndpoint, LandingStation, sort_predictions

_REAL_CODES = (
    "US GB FR DE JP CN IN ID SG AU BR ZA EG PK YE SA AE IT ES PT NL IE NO SE FI DK PL "
    "TR GR CY MT TN MA NG KE TZ MZ MG MU LK BD MM TH MY VN PH TW KR HK NZ FJ CL AR PE "
    "CO MX CA CU PR VE"
).split()


def country_codes(n: int) -> list[str]:
    real = list(_REAL_CODES)
    extra = ("".join(p) for p in itertools.product(string.ascii_uppercase, repeat=2))
    codes = real[:n]
    for code in extra:
        if len(codes) >= n:
            break
        if code not in real:
            codes.append(code)
    return codes


@dataclass(frozen=True)
class HotSpot:
    lat: float
    lon: float
    radius_km: float = 300.0
    peak: float = 9.5


@dataclass(frozen=True)
class WorldSpec:
    seed: int = 0
    n_countries: int = 12
    n_stations: int = 40
    n_cables: int = 20
    n_links: int = 500
    parallel_cable_groups: int = 2
    group_size: int = 4
    ases_per_country: int = 3
    unknown_fraction: float = 0.05
    landlocked_fraction: float = 0.2
    intra_as_fraction: float = 0.3
    extent: tuple[float, float, float, float] = (-60.0, 60.0, -180.0, 180.0)
    n_hot_spots: int = 3
    hot_spot_radius_km: float = 300.0
    hot_spot_peak: float = 9.5
    hot_spots: tuple[HotSpot, ...] = ()
    grid_resolution_deg: float = 0.1
    grid_base: float = 3.0

    def __post_init__(self) -> None:
        if self.n_countries < 1 or self.n_stations < 2 or self.n_cables < 1:
            raise SpecError("need n_countries >= 1, n_stations >= 2 and n_cables >= 1")
        if self.n_links < 0 or self.parallel_cable_groups < 0 or self.n_hot_spots < 0:
            raise SpecError("counts must be non-negative")
        if self.parallel_cable_groups and not 2 <= self.group_size <= 4:
            raise SpecError("parallel group_size must be between 2 and 4")
        if self.ases_per_country < 1:
            raise SpecError("ases_per_country must be >= 1")
        for name in ("unknown_fraction", "landlocked_fraction", "intra_as_fraction"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise SpecError(f"{name} must be in [0, 1)")
        lat_min, lat_max, lon_min, lon_max = self.extent
        if not (-90 <= lat_min < lat_max <= 90 and -180 <= lon_min < lon_max <= 180):
            raise SpecError(f"invalid extent {self.extent}")

    @classmethod
    def from_dict(cls, d: dict) -> "WorldSpec":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise SpecError(f"unknown world spec fields: {sorted(unknown)}")
        if "extent" in d:
            d["extent"] = tuple(d["extent"])
        if "hot_spots" in d:
            d["hot_spots"] = tuple(HotSpot(**h) for h in d["hot_spots"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)


def _ip_text(i: int) -> str:
    i += 1
    return f"10.{(i >> 16) & 255}.{(i >> 8) & 255}.{i & 255}"


def _pool(keys: np.ndarray, n_keys: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR layout grouping item indices by key (negative keys excluded)."""
    order = np.argsort(keys, kind="stable")
    order = order[keys[order] >= 0]
    counts = np.bincount(keys[order], minlength=n_keys) if order.size else np.zeros(n_keys, np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1])) if n_keys else np.zeros(0, np.int64)
    return order, starts, counts


def _draw_from_pool(rng, keys, order, starts, counts, fallback_n):
    """One member of each key's pool; uniform over all items when the pool is empty."""
    u = rng.random(keys.shape[0])
    rand = rng.integers(fallback_n, size=keys.shape[0])
    if order.size == 0:
        return rand
    c = counts[keys]
    pos = starts[keys] + np.minimum((u * c).astype(np.int64), np.maximum(c - 1, 0))
    pick = order[np.minimum(pos, order.size - 1)]
    return np.where(c > 0, pick, rand)


def generate_world(spec: WorldSpec) -> DatasetBundle:
    """Build the bundle for ``spec``; identical specs give identical bundles."""
    rng = np.random.default_rng(spec.seed)
    lat_min, lat_max, lon_min, lon_max = spec.extent

    # countries
    codes = country_codes(spec.n_countries)
    n_c = len(codes)
    c_lat = rng.uniform(lat_min, lat_max, n_c)
    c_lon = rng.uniform(lon_min, lon_max, n_c)
    n_land = min(n_c - 1, int(spec.landlocked_fraction * n_c))
    coastal = np.sort(rng.permutation(n_c)[: n_c - n_land])

    # landing stations
    st_country = np.concatenate(
        (coastal[: spec.n_stations], rng.choice(coastal, size=max(0, spec.n_stations - coastal.size)))
    )[: spec.n_stations]
    st_lat = np.clip(c_lat[st_country] + rng.normal(0.0, 1.5, spec.n_stations), -89.0, 89.0).round(4)
    st_lon = np.clip(c_lon[st_country] + rng.normal(0.0, 1.5, spec.n_stations), -179.9, 179.9).round(4)
    station_ids = [f"LS{k:05d}" for k in range(spec.n_stations)]
    stations = {
        sid: LandingStation(sid, float(st_lat[k]), float(st_lon[k]), codes[st_country[k]])
        for k, sid in enumerate(station_ids)
    }

    # cables and segments
    segments: list[CableSegment] = []
    seen: set[CableSegment] = set()
    for k in range(spec.n_cables):
        length = int(rng.integers(2, min(5, spec.n_stations) + 1))
        path = rng.choice(spec.n_stations, size=length, replace=False)
        for a, b in zip(path[:-1], path[1:]):
            seg = CableSegment(f"C{k:04d}", station_ids[a], station_ids[b])
            if seg not in seen:
                seen.add(seg)
                segments.append(seg)
    groups: list[list[CableSegment]] = []
    for g in range(spec.parallel_cable_groups):
        a, b = rng.choice(spec.n_stations, size=2, replace=False)
        group = [CableSegment(f"P{g:03d}-{m}", station_ids[a], station_ids[b]) for m in range(spec.group_size)]
        groups.append(group)
        segments.extend(group)
    group_of = {s: gi for gi, grp in enumerate(groups) for s in grp}
    by_station: dict[str, list[int]] = {}
    for si, s in enumerate(segments):
        by_station.setdefault(s.station_a, []).append(si)
        by_station.setdefault(s.station_b, []).append(si)
    st_index = {sid: k for k, sid in enumerate(station_ids)}
    seg_a_country = np.array([st_country[st_index[s.station_a]] for s in segments], dtype=np.int64)
    seg_b_country = np.array([st_country[st_index[s.station_b]] for s in segments], dtype=np.int64)

    records: list[CrossLayerRecord] = []
    n_links = spec.n_links
    if n_links:
        # IP pool
        n_ips = max(8, int(1.6 * n_links) + 4)
        if n_ips > (1 << 24) - 2:
            raise SpecError("too many links for the synthetic address pool")
        ip_country = rng.integers(n_c, size=n_ips)
        ip_cunk = rng.random(n_ips) < spec.unknown_fraction
        ip_asn = 64512 + ip_country * spec.ases_per_country + rng.integers(spec.ases_per_country, size=n_ips)
        ip_aunk = rng.random(n_ips) < spec.unknown_fraction
        ip_lat = np.clip(c_lat[ip_country] + rng.normal(0.0, 2.0, n_ips), -89.9, 89.9).round(4)
        ip_lon = np.clip(c_lon[ip_country] + rng.normal(0.0, 2.0, n_ips), -179.9, 179.9).round(4)
        country_key = np.where(ip_cunk, -1, ip_country)
        c_order, c_starts, c_counts = _pool(country_key, n_c)
        n_asn = n_c * spec.ases_per_country
        asn_key = np.where(ip_aunk, -1, ip_asn - 64512)
        a_order, a_starts, a_counts = _pool(asn_key, n_asn)

        # links
        link_seg = rng.integers(len(segments), size=n_links)
        local_a = rng.random(n_links) < 0.75
        local_b = rng.random(n_links) < 0.75
        ip_a = np.where(
            local_a,
            _draw_from_pool(rng, seg_a_country[link_seg], c_order, c_starts, c_counts, n_ips),
            rng.integers(n_ips, size=n_links),
        )
        ip_b = np.where(
            local_b,
            _draw_from_pool(rng, seg_b_country[link_seg], c_order, c_starts, c_counts, n_ips),
            rng.integers(n_ips, size=n_links),
        )
        same_as = (rng.random(n_links) < spec.intra_as_fraction) & ~ip_aunk[ip_a]
        if same_as.any():
            keys = np.where(ip_aunk[ip_a], 0, ip_asn[ip_a] - 64512)
            ip_b = np.where(same_as, _draw_from_pool(rng, keys, a_order, a_starts, a_counts, n_ips), ip_b)
        # unique, non-degenerate links
        for _ in range(1000):
            lo = np.minimum(ip_a, ip_b)
            hi = np.maximum(ip_a, ip_b)
            key = lo * n_ips + hi
            _, first = np.unique(key, return_index=True)
            bad = np.ones(n_links, dtype=bool)
            bad[first] = False
            bad |= ip_a == ip_b
            if not bad.any():
                break
            ip_b = np.where(bad, rng.integers(n_ips, size=n_links), ip_b)
        else:  # pragma: no cover - needs an absurdly dense spec
            raise SpecError("could not draw unique IP links")

        # predictions
        n_pred_alt = rng.random(n_links)
        group_take = rng.random(n_links)
        top_score = rng.uniform(0.5, 1.0, n_links).round(3)
        decay = rng.uniform(0.3, 0.95, (n_links, 3)).round(3)
        alt_pick = rng.random((n_links, 3))

        endpoints: dict[int, IpEndpoint] = {}

        def endpoint(i: int) -> IpEndpoint:
            e = endpoints.get(i)
            if e is None:
                cunk = bool(ip_cunk[i])
                e = IpEndpoint(
                    _ip_text(i),
                    None if cunk else codes[ip_country[i]],
                    None if ip_aunk[i] else int(ip_asn[i]),
                    None if cunk else float(ip_lat[i]),
                    None if cunk else float(ip_lon[i]),
                )
                endpoints[i] = e
            return e

        for k in range(n_links):
            seg = segments[link_seg[k]]
            gi = group_of.get(seg)
            if gi is not None:
                grp = groups[gi]
                gt = float(group_take[k])
                m = len(grp) if gt < 0.5 else min(len(grp), 1 + int((gt - 0.5) * 2 * len(grp)))
                others = [s for s in grp if s != seg]
                chosen = [seg] + others[: m - 1]
            else:
                chosen = [seg]
                if n_pred_alt[k] >= 0.7:
                    pool = sorted(set(by_station[seg.station_a] + by_station[seg.station_b]))
                    extra = 1 if n_pred_alt[k] < 0.9 else 2
                    for q in range(extra):
                        cand = segments[pool[int(alt_pick[k, q] * len(pool)) % len(pool)]]
                        if cand not in chosen:
                            chosen.append(cand)
            score = float(top_score[k])
            preds = [(chosen[0], score)]
            for q, s in enumerate(chosen[1:]):
                if gi is not None and group_take[k] < 0.25:
                    preds.append((s, score))  # tied parallel predictions
                else:
                    preds.append((s, round(score * float(decay[k, q]), 3)))
            records.append(CrossLayerRecord(endpoint(int(ip_a[k])), endpoint(int(ip_b[k])), sort_predictions(preds)))
        records.sort(key=lambda r: r.key)

    grid = _hazard_grid(spec, rng, stations, station_ids)
    return DatasetBundle(stations, tuple(records), tuple(sorted(segments)), {"hazard": grid})


def _hazard_grid(spec: WorldSpec, rng, stations, station_ids) -> IntensityGrid:
    spots = list(spec.hot_spots)
    if not spots and spec.n_hot_spots:
        picks = rng.choice(len(station_ids), size=min(spec.n_hot_spots, len(station_ids)), replace=False)
        for k in sorted(picks.tolist()):
            st = stations[station_ids[k]]
            spots.append(HotSpot(st.lat, st.lon, spec.hot_spot_radius_km, spec.hot_spot_peak))
    res = spec.grid_resolution_deg
    cells: dict[tuple[int, int], float] = {}
    for spot in spots:
        dlat = spot.radius_km / 111.19
        dlon = dlat / max(0.05, math.cos(math.radians(spot.lat)))
        i0, i1 = math.floor((spot.lat - dlat) / res), math.ceil((spot.lat + dlat) / res)
        j0, j1 = math.floor((spot.lon - dlon) / res), math.ceil((spot.lon + dlon) / res)
        for i in range(max(i0, round(-90 / res)), min(i1, round(90 / res)) + 1):
            for j in range(max(j0, round(-180 / res)), min(j1, round(180 / res)) + 1):
                lat, lon = round(i * res, 6), round(j * res, 6)
                d = haversine_km((spot.lat, spot.lon), (lat, lon))
                if d > spot.radius_km:
                    continue
                v = round(spec.grid_base + (spot.peak - spec.grid_base) * (1.0 - d / spot.radius_km), 4)
                if v > cells.get((i, j), -math.inf):
                    cells[(i, j)] = v
    return IntensityGrid._from_index(cells, res, "mmi")


def default_config(grid_name: str = "hazard") -> dict:
    """Run configuration matching the files written by :func:`write_world`."""
    return {
        "seed": 0,
        "mode": "top",
        "data": {
            "stations": "stations.csv",
            "segments": "segments.csv",
            "crosslayer": "crosslayer.jsonl",
        },
        "scenario": {
            "model": {
                "name": grid_name,
                "grid_file": f"grid_{grid_name}.csv",
                "units": "mmi",
                "resolution_deg": 0.1,
                "threshold": 6.0,
                "direction": "above",
                "probe_km": 10.0,
            },
            "distribution": {"p": 1.0, "strategy": "top_n"},
            "region": {"kind": "global"},
        },
    }


def write_world(bundle: DatasetBundle, out_dir: PathLike, spec: Optional[WorldSpec] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_stations(bundle.stations, out / "stations.csv")
    dump_segments(bundle.segments, out / "segments.csv")
    dump_cross_layer_map(bundle.records, out / "crosslayer.jsonl")
    for name, grid in sorted(bundle.grids.items()):
        dump_grid(grid, out / f"grid_{name}.csv")
    (out / "config.json").write_text(json.dumps(default_config(), indent=2, sort_keys=True) + "\n")
    if spec is not None:
        (out / "world_spec.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return out
