"""Run configuration: one JSON document describing inputs, scenario and analyses.

Paths are resolved relative to the directory holding the config file. Every
random draw derives from the root ``seed``; sections cannot carry their own.
Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .analysis.sensitivity import ErrorMix
from .analysis.sweep import parse_probabilities
from .errors import ConfigError, DataError
from .hazard import DEFAULT_MODELS, EventModel, GmiceCoefficients, IntensityGrid, build_model
from .identify import FailureDistribution, ManualFailure, Scenario, Strategy
from .ingest import PathLike, load_intensity_grid
from .model import CableSegment, PredictionMode, Region


def _check_keys(section: str, d: Any, allowed: set[str]) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{section}: expected an object, got {type(d).__name__}")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{section}: unknown keys {sorted(extra)}")
    return d


def _num(section: str, v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}: expected a number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class ModelSpec:
    """Event model manifest; unset fields fall back to the named default model."""

    name: str
    grid_file: Optional[str] = None
    latitude_rule: bool = False
    units: Optional[str] = None
    resolution_deg: Optional[float] = None
    threshold: Optional[float] = None
    direction: Optional[str] = None
    probe_km: Optional[float] = None
    convert: Optional[str] = None
    gmice: Optional[GmiceCoefficients] = None

    KEYS = frozenset(
        {
            "name",
            "grid_file",
            "latitude_rule",
            "units",
            "resolution_deg",
            "threshold",
            "direction",
            "probe_km",
            "convert",
            "gmice",
        }
    )

    @classmethod
    def parse(cls, d: Any, section: str = "model") -> "ModelSpec":
        d = _check_keys(section, d, set(cls.KEYS))
        if "name" not in d:
            raise ConfigError(f"{section}: 'name' is required")
        defaults = DEFAULT_MODELS.get(d["name"], {})
        lat_rule = bool(d.get("latitude_rule", defaults.get("latitude_rule", False) and "grid_file" not in d))
        if lat_rule == ("grid_file" in d):
            raise ConfigError(f"{section}: give exactly one of 'grid_file' or 'latitude_rule'")
        convert = d.get("convert", defaults.get("convert") if "units" not in d else None)
        spec = cls(
            name=str(d["name"]),
            grid_file=d.get("grid_file"),
            latitude_rule=lat_rule,
            units=d.get("units", defaults.get("units")),
            resolution_deg=_num(section, d["resolution_deg"]) if "resolution_deg" in d else defaults.get("resolution_deg"),
            threshold=_num(section, d["threshold"]) if "threshold" in d else None,
            direction=d.get("direction"),
            probe_km=_num(section, d["probe_km"]) if "probe_km" in d else None,
            convert=convert,
            gmice=_parse_gmice(d["gmice"], f"{section}.gmice") if "gmice" in d else None,
        )
        if spec.grid_file is not None and spec.resolution_deg is None:
            raise ConfigError(f"{section}: 'resolution_deg' is required for grid models")
        return spec


def _parse_gmice(d: Any, section: str) -> GmiceCoefficients:
    fields = set(GmiceCoefficients.__dataclass_fields__)
    d = _check_keys(section, d, fields)
    return GmiceCoefficients(**{k: _num(f"{section}.{k}", v) for k, v in d.items()})


@dataclass(frozen=True)
class ScenarioSpec:
    model: Optional[ModelSpec] = None
    probability: float = 1.0
    strategy: Strategy = Strategy.TOP_N
    region: Region = Region()
    manual: ManualFailure = ManualFailure()
    name: str = ""

    @classmethod
    def parse(cls, d: Any, section: str = "scenario") -> "ScenarioSpec":
        d = _check_keys(section, d, {"name", "model", "distribution", "region", "manual"})
        model = ModelSpec.parse(d["model"], f"{section}.model") if d.get("model") is not None else None
        dist = _check_keys(f"{section}.distribution", d.get("distribution", {}), {"p", "strategy"})
        try:
            strategy = Strategy.parse(dist.get("strategy", "top_n"))
        except ValueError:
            raise ConfigError(f"{section}.distribution: unknown strategy {dist.get('strategy')!r}") from None
        p = _num(f"{section}.distribution.p", dist.get("p", 1.0))
        if not 0.0 < p <= 1.0:
            raise ConfigError(f"{section}.distribution: p must be in (0, 1], got {p}")
        region = _parse_region(d.get("region", {"kind": "global"}), f"{section}.region")
        manual = _parse_manual(d.get("manual", {}), f"{section}.manual")
        if model is None and manual.empty:
            raise ConfigError(f"{section}: needs a model or manual failures")
        name = str(d.get("name", model.name if model else "manual"))
        return cls(model, p, strategy, region, manual, name)


def _parse_region(d: Any, section: str) -> Region:
    d = _check_keys(section, d, {"kind", "countries", "bbox"})
    kind = d.get("kind", "global")
    try:
        if kind == "global":
            return Region.global_()
        if kind == "countries":
            return Region.of_countries(d.get("countries") or ())
        if kind == "bbox":
            box = d.get("bbox")
            if not isinstance(box, list) or len(box) != 4:
                raise ConfigError(f"{section}: bbox must be [lat_min, lat_max, lon_min, lon_max]")
            return Region.box(*(_num(section, x) for x in box))
    except DataError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    raise ConfigError(f"{section}: unknown region kind {kind!r}")


def _parse_manual(d: Any, section: str) -> ManualFailure:
    d = _check_keys(section, d, {"segments", "stations", "cables", "cable_segments"})
    try:
        segs = tuple(CableSegment(s["cable"], s["station_a"], s["station_b"]) for s in d.get("segments", ()))
        pairs = {str(c): tuple((a, b) for a, b in v) for c, v in d.get("cable_segments", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: malformed entry ({exc})") from None
    except DataError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    return ManualFailure(
        segments=segs,
        stations=tuple(str(x) for x in d.get("stations", ())),
        cables=tuple(str(x) for x in d.get("cables", ())),
        cable_segments=pairs,
    )


@dataclass(frozen=True)
class SweepSpec:
    probabilities: tuple[float, ...] = tuple(round(0.01 * k, 10) for k in range(1, 101))
    strategies: tuple[Strategy, ...] = (Strategy.TOP_N, Strategy.RANDOM, Strategy.WEIGHTED)
    runs: int = 10


@dataclass(frozen=True)
class ClusterSpec:
    cut: float = 0.8
    features: str = "correlation"


@dataclass(frozen=True)
class SensitivitySpec:
    mixes: tuple[ErrorMix, ...] = (ErrorMix(77, 19, 4),)
    rounds: int = 10


@dataclass(frozen=True)
class AnalysesSpec:
    risk: bool = True
    interconnect: bool = True
    connectivity: bool = False
    intra_fraction: bool = False
    sweep: Optional[SweepSpec] = None
    cluster: Optional[ClusterSpec] = None
    sensitivity: Optional[SensitivitySpec] = None


def _parse_analyses(d: Any) -> AnalysesSpec:
    d = _check_keys(
        "analyses", d, {"risk", "interconnect", "connectivity", "intra_fraction", "sweep", "cluster", "sensitivity"}
    )
    out = AnalysesSpec(**{k: bool(d[k]) for k in ("risk", "interconnect", "connectivity", "intra_fraction") if k in d})
    if d.get("sweep"):
        s = _check_keys("analyses.sweep", d["sweep"] if isinstance(d["sweep"], dict) else {}, {"p", "strategies", "runs"})
        try:
            if "p" not in s:
                probs = SweepSpec.probabilities
            elif isinstance(s["p"], list):
                probs = tuple(float(x) for x in s["p"])
            else:
                probs = tuple(parse_probabilities(str(s["p"])))
            strategies = (
                tuple(Strategy.parse(x) for x in _as_list(s["strategies"])) if "strategies" in s else SweepSpec.strategies
            )
        except ValueError as exc:
            raise ConfigError(f"analyses.sweep: {exc}") from None
        if any(not 0.0 < p <= 1.0 for p in probs):
            raise ConfigError("analyses.sweep: probabilities must lie in (0, 1]")
        runs = int(s.get("runs", 10))
        if runs < 1:
            raise ConfigError("analyses.sweep: runs must be >= 1")
        out = replace(out, sweep=SweepSpec(probs, strategies, runs))
    if d.get("cluster"):
        c = _check_keys("analyses.cluster", d["cluster"] if isinstance(d["cluster"], dict) else {}, {"cut", "features"})
        features = c.get("features", "correlation")
        if features not in ("correlation", "normalized"):
            raise ConfigError(f"analyses.cluster: unknown features {features!r}")
        out = replace(out, cluster=ClusterSpec(_num("analyses.cluster.cut", c.get("cut", 0.8)), features))
    if d.get("sensitivity"):
        s = _check_keys(
            "analyses.sensitivity", d["sensitivity"] if isinstance(d["sensitivity"], dict) else {}, {"mixes", "rounds"}
        )
        mixes = tuple(ErrorMix.parse(m if isinstance(m, str) else ",".join(map(str, m))) for m in s.get("mixes", ["77,19,4"]))
        rounds = int(s.get("rounds", 10))
        if rounds < 1:
            raise ConfigError("analyses.sensitivity: rounds must be >= 1")
        out = replace(out, sensitivity=SensitivitySpec(mixes, rounds))
    return out


def _as_list(v: Any) -> list:
    return [x.strip() for x in v.split(",")] if isinstance(v, str) else list(v)


@dataclass(frozen=True)
class DataPaths:
    stations: Path
    crosslayer: Path
    segments: Optional[Path] = None
    polygons: Optional[Path] = None

    def existing(self) -> dict[str, Path]:
        return {k: v for k, v in vars(self).items() if v is not None}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    mode: PredictionMode
    base_dir: Path
    data: DataPaths
    scenario: Optional[ScenarioSpec]
    multi_event: tuple[ScenarioSpec, ...]
    analyses: AnalysesSpec
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def digest(self) -> str:
        """sha256 of the canonical JSON form of the effective config."""
        return hashlib.sha256(canonical_json(self.effective()).encode()).hexdigest()

    def effective(self) -> dict:
        d = json.loads(json.dumps(self.raw))
        d["seed"] = self.seed
        d["mode"] = self.mode.value
        return d

    def with_overrides(self, seed: Optional[int] = None, mode: Optional[str] = None) -> "RunConfig":
        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if mode is not None:
            out = replace(out, mode=PredictionMode(mode))
        return out

    def path(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def scenarios(self) -> list[tuple[ScenarioSpec, int]]:
        """Every scenario paired with its seed: the main one gets the root seed, event i gets seed + 1 + i."""
        out = []
        if self.scenario is not None:
            out.append((self.scenario, self.seed))
        out.extend((s, self.seed + 1 + i) for i, s in enumerate(self.multi_event))
        return out

    def seed_schedule(self) -> dict:
        sched: dict[str, Any] = {"root": self.seed}
        sched["scenarios"] = [
            {"name": s.name, "seed": None if s.strategy is Strategy.TOP_N else seed} for s, seed in self.scenarios()
        ]
        if self.analyses.sweep is not None:
            sched["sweep"] = [self.seed + r for r in range(self.analyses.sweep.runs)]
        if self.analyses.sensitivity is not None:
            sched["sensitivity"] = [self.seed + r for r in range(self.analyses.sensitivity.rounds)]
        return sched


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


TOP_KEYS = {"seed", "mode", "data", "scenario", "multi_event", "analyses"}


def parse_config(d: Any, base_dir: PathLike = ".") -> RunConfig:
    d = _check_keys("config", d, TOP_KEYS)
    base = Path(base_dir)
    seed = d.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"config: seed must be a non-negative integer, got {seed!r}")
    try:
        mode = PredictionMode(d.get("mode", "top"))
    except ValueError:
        raise ConfigError(f"config: mode must be 'top' or 'weighted', got {d.get('mode')!r}") from None
    data = _check_keys("data", d.get("data"), {"stations", "crosslayer", "segments", "polygons"})
    for key in ("stations", "crosslayer"):
        if key not in data:
            raise ConfigError(f"data: '{key}' is required")

    def resolve(rel: Optional[str]) -> Optional[Path]:
        if rel is None:
            return None
        p = Path(rel)
        return p if p.is_absolute() else base / p

    paths = DataPaths(
        resolve(data["stations"]), resolve(data["crosslayer"]), resolve(data.get("segments")), resolve(data.get("polygons"))
    )
    scenario = ScenarioSpec.parse(d["scenario"]) if d.get("scenario") is not None else None
    multi = d.get("multi_event", [])
    if not isinstance(multi, list):
        raise ConfigError("multi_event: expected a list of scenarios")
    multi_event = tuple(ScenarioSpec.parse(s, f"multi_event[{i}]") for i, s in enumerate(multi))
    cfg = RunConfig(
        seed=seed,
        mode=mode,
        base_dir=base,
        data=paths,
        scenario=scenario,
        multi_event=multi_event,
        analyses=_parse_analyses(d.get("analyses", {})),
        raw=d,
    )
    check_files(cfg)
    return cfg


def check_files(cfg: RunConfig) -> None:
    """Every file the config names must exist."""
    missing = [str(p) for p in cfg.data.existing().values() if not p.is_file()]
    for spec, _ in cfg.scenarios():
        if spec.model is not None and spec.model.grid_file is not None:
            p = cfg.path(spec.model.grid_file)
            if not p.is_file():
                missing.append(str(p))
    if missing:
        raise ConfigError(f"config references missing files: {sorted(set(missing))}")


def load_config(path: PathLike) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(d, path.parent)


class ModelLoader:
    """Builds event models from manifests, loading each grid file once."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._grids: dict[tuple[Path, str, float], IntensityGrid] = {}
        self._models: dict[ModelSpec, EventModel] = {}

    def grid(self, spec: ModelSpec) -> IntensityGrid:
        key = (self.cfg.path(spec.grid_file), spec.units or "", float(spec.resolution_deg))
        if key not in self._grids:
            self._grids[key] = load_intensity_grid(*key)
        return self._grids[key]

    def model(self, spec: ModelSpec) -> EventModel:
        if spec not in self._models:
            grid = None if spec.latitude_rule else self.grid(spec)
            self._models[spec] = build_model(
                spec.name, grid, spec.threshold, spec.direction, spec.probe_km, spec.convert, spec.gmice
            )
        return self._models[spec]

    def scenario(self, spec: ScenarioSpec, seed: int) -> Scenario:
        model = self.model(spec.model) if spec.model is not None else None
        dist = FailureDistribution(spec.probability, spec.strategy, None if spec.strategy is Strategy.TOP_N else seed)
        return Scenario(model, dist, spec.region, spec.manual, spec.name)
