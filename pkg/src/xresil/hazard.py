"""Disaster event models: gridded intensities, thresholds and probing radii."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .errors import DataError, DomainError, RangeError
from .model import check_lat_lon

EARTH_RADIUS_KM = 6371.0
KM_PER_DEG = math.pi * EARTH_RADIUS_KM / 180.0
SNAP_TOL = 1e-9


def haversine_km(p: tuple[float, float], q: tuple[float, float]) -> float:
    """Great-circle distance between two (lat, lon) points in degrees."""
    lat1, lon1 = math.radians(p[0]), math.radians(p[1])
    lat2, lon2 = math.radians(q[0]), math.radians(q[1])
    h = math.sin((lat2 - lat1) / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def haversine_km_array(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized :func:`haversine_km` from one point to many."""
    lat1, lon1 = math.radians(lat), math.radians(lon)
    lat2, lon2 = np.radians(lats), np.radians(lons)
    h = np.sin((lat2 - lat1) / 2.0) ** 2 + math.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


class Direction(str, enum.Enum):
    ABOVE = "above"
    BELOW = "below"


def _decimals(resolution: float) -> int:
    return max(0, min(12, -math.floor(math.log10(resolution)) + 3))


@dataclass(frozen=True, eq=False)
class IntensityGrid:
    """Sparse grid of cell intensities at a fixed angular resolution.

    Cells are keyed by integer multiples of ``resolution_deg``; arrays are kept
    sorted by (lat, lon) so iteration order is deterministic.
    """

    resolution_deg: float
    lat_idx: np.ndarray
    lon_idx: np.ndarray
    values: np.ndarray
    units: str = ""
    _index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_cells(
        cls,
        cells: Iterable[tuple[float, float, float]],
        resolution_deg: float = 0.1,
        units: str = "",
    ) -> "IntensityGrid":
        """Build a grid from ``(lat, lon, value)`` triples.

        Coordinates must sit on the resolution lattice. Duplicate cells keep
        the maximum value.
        """
        if not resolution_deg > 0:
            raise DataError(f"resolution_deg must be positive, got {resolution_deg}")
        merged: dict[tuple[int, int], float] = {}
        for lat, lon, value in cells:
            i, j = snap(lat, lon, resolution_deg)
            if not math.isfinite(value):
                raise RangeError(f"non-finite intensity at ({lat}, {lon})")
            old = merged.get((i, j))
            if old is None or value > old:
                merged[(i, j)] = float(value)
        return cls._from_index(merged, resolution_deg, units)

    @classmethod
    def _from_index(cls, merged: dict[tuple[int, int], float], resolution_deg: float, units: str) -> "IntensityGrid":
        keys = sorted(merged)
        n = len(keys)
        lat_idx = np.fromiter((k[0] for k in keys), dtype=np.int64, count=n)
        lon_idx = np.fromiter((k[1] for k in keys), dtype=np.int64, count=n)
        values = np.fromiter((merged[k] for k in keys), dtype=np.float64, count=n)
        return cls(resolution_deg, lat_idx, lon_idx, values, units, dict(merged))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def lats(self) -> np.ndarray:
        return np.round(self.lat_idx * self.resolution_deg, _decimals(self.resolution_deg))

    @property
    def lons(self) -> np.ndarray:
        return np.round(self.lon_idx * self.resolution_deg, _decimals(self.resolution_deg))

    def cells(self) -> list[tuple[float, float, float]]:
        return list(zip(self.lats.tolist(), self.lons.tolist(), self.values.tolist()))

    def value_at(self, i: int, j: int) -> Optional[float]:
        return self._index.get((i, j))

    def map_values(self, fn, units: Optional[str] = None) -> "IntensityGrid":
        merged = {k: float(fn(v)) for k, v in self._index.items()}
        return IntensityGrid._from_index(merged, self.resolution_deg, self.units if units is None else units)

    def same_as(self, other: "IntensityGrid") -> bool:
        return (
            self.resolution_deg == other.resolution_deg
            and self.units == other.units
            and self._index == other._index
        )


def snap(lat: float, lon: float, resolution_deg: float) -> tuple[int, int]:
    """Integer lattice indices of a coordinate that lies on the grid."""
    check_lat_lon(lat, lon)
    i = round(lat / resolution_deg)
    j = round(lon / resolution_deg)
    if abs(i * resolution_deg - lat) > SNAP_TOL or abs(j * resolution_deg - lon) > SNAP_TOL:
        raise DataError(f"({lat}, {lon}) is not on the {resolution_deg} degree lattice")
    return i, j


class LatitudeRule:
    """Grid-free model whose intensity at a point is its absolute latitude."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "LATITUDE_RULE"


LATITUDE_RULE = LatitudeRule()


@dataclass(frozen=True, eq=False)
class EventModel:
    name: str
    grid: Union[IntensityGrid, LatitudeRule]
    threshold: float
    direction: Direction = Direction.ABOVE
    probe_km: float = 10.0
    units: str = ""

    def __post_init__(self) -> None:
        if not self.probe_km > 0:
            raise DataError(f"model {self.name!r}: probe_km must be positive")
        if not math.isfinite(self.threshold):
            raise DataError(f"model {self.name!r}: threshold must be finite")

    @property
    def latitude_rule(self) -> bool:
        return self.grid is LATITUDE_RULE


def exceeds(model: EventModel, intensity: float) -> bool:
    """Whether an intensity is on the impacted side of the threshold (inclusive)."""
    if model.direction is Direction.ABOVE:
        return intensity >= model.threshold
    return intensity <= model.threshold


def severity(model: EventModel, intensity):
    """Distance past the threshold on the impacted side; larger is worse.

    Works elementwise on arrays. Used to rank and weight candidate locations
    so that BELOW models (elevation) favour the lowest values.
    """
    if model.direction is Direction.ABOVE:
        return intensity
    return model.threshold - intensity


def _max_dlon_rad(lat_rad: float, angular: float) -> float:
    # longitude half-width of a spherical cap of angular radius `angular`
    if angular >= math.pi / 2 - abs(lat_rad):
        return math.pi
    return math.asin(min(1.0, math.sin(angular) / math.cos(lat_rad)))


def probe_intensity(model: EventModel, point: tuple[float, float]) -> Optional[float]:
    """Maximum intensity over cells within ``probe_km`` of ``point``.

    Returns ``None`` when no cell centre falls inside the radius. The latitude
    rule returns ``abs(lat)`` directly.
    """
    lat, lon = point
    if model.latitude_rule:
        return abs(lat)
    grid = model.grid
    res = grid.resolution_deg
    angular = model.probe_km / EARTH_RADIUS_KM
    dlat_cells = math.ceil(math.degrees(angular) / res) + 1
    dlon_cells = math.ceil(math.degrees(_max_dlon_rad(math.radians(lat), angular)) / res) + 1
    n_lon = round(360.0 / res)
    wraps = (0, -n_lon, n_lon) if abs(n_lon * res - 360.0) < SNAP_TOL else (0,)
    dlon_cells = min(dlon_cells, n_lon // 2 + 1) if len(wraps) > 1 else dlon_cells
    i0 = round(lat / res)
    j0 = round(lon / res)
    best = None
    index = grid._index
    seen = set()
    for i in range(i0 - dlat_cells, i0 + dlat_cells + 1):
        clat = i * res
        if clat < -90.0 - SNAP_TOL or clat > 90.0 + SNAP_TOL:
            continue
        for j in range(j0 - dlon_cells, j0 + dlon_cells + 1):
            for w in wraps:
                key = (i, j + w)
                if key in seen:
                    continue
                v = index.get(key)
                if v is None:
                    continue
                seen.add(key)
                if best is not None and v <= best:
                    continue
                if haversine_km((lat, lon), (clat, (j + w) * res)) <= model.probe_km:
                    best = v
    return best


@dataclass(frozen=True)
class GmiceCoefficients:
    """Piecewise log-linear ground-motion to intensity conversion constants."""

    c1: float = 1.78
    c2: float = 1.55
    c3: float = -1.60
    c4: float = 3.70
    breakpoint_log10: float = 1.57
    mmi_min: float = 1.0
    mmi_max: float = 10.0

    def low_branch(self, log_pga: float) -> float:
        return self.c1 + self.c2 * log_pga

    def high_branch(self, log_pga: float) -> float:
        return self.c3 + self.c4 * log_pga


PGA_GMICE = GmiceCoefficients()


def pga_to_mmi(pga_cm_s2: float, coeffs: GmiceCoefficients = PGA_GMICE) -> float:
    """Convert peak ground acceleration (cm/s^2) to Modified Mercalli Intensity."""
    if not pga_cm_s2 > 0:
        raise DomainError(f"PGA must be positive, got {pga_cm_s2}")
    x = math.log10(pga_cm_s2)
    mmi = coeffs.low_branch(x) if x <= coeffs.breakpoint_log10 else coeffs.high_branch(x)
    return min(coeffs.mmi_max, max(coeffs.mmi_min, mmi))


def _pga_cell_to_mmi(value: float, coeffs: GmiceCoefficients = PGA_GMICE) -> float:
    # No measurable shaking maps to the bottom of the scale.
    return coeffs.mmi_min if value <= 0 else pga_to_mmi(value, coeffs)


CONVERSIONS = {"pga_to_mmi": (_pga_cell_to_mmi, "mmi")}


# name -> (threshold, direction, probe_km, grid units, conversion)
DEFAULT_MODELS: dict[str, dict] = {
    "earthquake": {
        "threshold": 6.0,
        "direction": "above",
        "probe_km": 10.0,
        "units": "pga_cm_s2",
        "convert": "pga_to_mmi",
        "resolution_deg": 0.1,
    },
    "hurricane": {"threshold": 64.0, "direction": "above", "probe_km": 50.0, "units": "knots", "resolution_deg": 0.1},
    "sea_rise": {"threshold": 1.0, "direction": "below", "probe_km": 10.0, "units": "m_elevation", "resolution_deg": 0.1},
    "solar": {"threshold": 50.0, "direction": "above", "probe_km": 1.0, "units": "deg_latitude", "latitude_rule": True},
}


def build_model(
    name: str,
    grid: Union[IntensityGrid, LatitudeRule, None],
    threshold: Optional[float] = None,
    direction: Union[str, Direction, None] = None,
    probe_km: Optional[float] = None,
    convert: Optional[str] = None,
    gmice: Optional[GmiceCoefficients] = None,
) -> EventModel:
    """Assemble an :class:`EventModel`, filling unset parameters from defaults.

    ``name`` selects the default row (earthquake, hurricane, sea_rise, solar);
    unknown names require every parameter explicitly. ``gmice`` swaps the
    constants used by the ``pga_to_mmi`` conversion.
    """
    defaults = DEFAULT_MODELS.get(name, {})
    if grid is None:
        if not defaults.get("latitude_rule"):
            raise DataError(f"model {name!r} needs an intensity grid")
        grid = LATITUDE_RULE
    threshold = defaults.get("threshold") if threshold is None else threshold
    direction = defaults.get("direction") if direction is None else direction
    probe_km = defaults.get("probe_km") if probe_km is None else probe_km
    if threshold is None or direction is None or probe_km is None:
        raise DataError(f"model {name!r}: threshold, direction and probe_km are required")
    units = "deg_latitude" if grid is LATITUDE_RULE else grid.units
    if convert is not None and grid is not LATITUDE_RULE:
        try:
            fn, units = CONVERSIONS[convert]
        except KeyError:
            raise DataError(f"unknown intensity conversion {convert!r}") from None
        if gmice is not None and convert == "pga_to_mmi":
            grid = grid.map_values(lambda v: _pga_cell_to_mmi(v, gmice), units)
        else:
            grid = grid.map_values(fn, units)
    return EventModel(name, grid, float(threshold), Direction(direction), float(probe_km), units)
