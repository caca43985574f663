"""Stage orchestration shared by ``xresil run`` and the per-stage subcommands.

Stages: load -> embed -> identify -> analyze. Each stage is timed into the run
manifest, and any package error escaping a stage is tagged with its name.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

from . import __version__
from .analysis import (
    connectivity_stats,
    correlation_clusters,
    cross_layer_impact,
    intra_fraction_per_p_country,
    intra_inter_impact,
    probability_sweep,
    risk_profile,
    sensitivity_run,
)
from .analysis.sensitivity import ErrorMix
from .config import ClusterSpec, ModelLoader, RunConfig, SensitivitySpec, SweepSpec
from .embedding import EmbeddedMaps, dump_map, dump_pc_nc, embed
from .errors import ConfigError, XresilError
from .hazard import probe_intensity
from .identify import FailureDistribution, Identifier, ImpactedSet, PolygonLocator, Scenario, union_events
from .ingest import DatasetBundle, LoadSummary, load_bundle
from .model import PredictionMode
from .report import (
    RunManifest,
    read_impacted,
    write_clusters,
    write_connectivity,
    write_impact,
    write_impacted,
    write_interconnect,
    write_intra_fraction,
    write_risk,
    write_sensitivity,
    write_sweep,
)

log = logging.getLogger(__name__)


@dataclass
class Outputs:
    paths: list[Path]

    def add(self, p) -> None:
        if isinstance(p, (list, tuple)):
            self.paths.extend(p)
        else:
            self.paths.append(p)


class Pipeline:
    """One configured run writing into ``out_dir``."""

    def __init__(self, cfg: RunConfig, out_dir, command: str = "run", threads: Optional[int] = None):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.threads = threads
        self.manifest = RunManifest(
            command=command,
            version=__version__,
            config_sha256=cfg.digest(),
            config=cfg.effective(),
            seed_schedule=cfg.seed_schedule(),
        )
        self.outputs = Outputs([])
        self.summary = LoadSummary()
        self.models = ModelLoader(cfg)
        self._bundle: Optional[DatasetBundle] = None
        self._maps: dict[PredictionMode, EmbeddedMaps] = {}
        self._identifier: Optional[Identifier] = None

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        except XresilError as exc:
            if getattr(exc, "stage", None) is None:
                exc.stage = name
            raise
        finally:
            self.manifest.timings_s[name] = round(self.manifest.timings_s.get(name, 0.0) + time.perf_counter() - t0, 6)

    # -- stages ----------------------------------------------------------------

    @property
    def bundle(self) -> DatasetBundle:
        if self._bundle is None:
            with self.stage("load"):
                d = self.cfg.data
                self._bundle = load_bundle(d.stations, d.crosslayer, d.segments, summary=self.summary)
                inputs = {k: v for k, v in d.existing().items()}
                for spec, _ in self.cfg.scenarios():
                    if spec.model is not None and spec.model.grid_file is not None:
                        inputs[f"grid:{spec.model.grid_file}"] = self.cfg.path(spec.model.grid_file)
                self.manifest.add_inputs(inputs)
        return self._bundle

    def maps(self, mode: Optional[PredictionMode] = None) -> EmbeddedMaps:
        mode = self.cfg.mode if mode is None else mode
        if mode not in self._maps:
            bundle = self.bundle
            with self.stage("embed"):
                self._maps[mode] = embed(bundle, mode)
        return self._maps[mode]

    @property
    def identifier(self) -> Identifier:
        if self._identifier is None:
            bundle = self.bundle
            locator = PolygonLocator(self.cfg.data.polygons) if self.cfg.data.polygons is not None else None
            self._identifier = Identifier(bundle, locator)
        return self._identifier

    def scenarios(self) -> list[Scenario]:
        return [self.models.scenario(spec, seed) for spec, seed in self.cfg.scenarios()]

    def identify(self) -> ImpactedSet:
        identifier = self.identifier
        with self.stage("identify"):
            scenarios = self.scenarios()
            if not scenarios:
                raise ConfigError("no scenario configured; add 'scenario' or 'multi_event'")
            self._count_no_data(scenarios)
            sets = [identifier.identify(s) for s in scenarios]
            return sets[0] if len(sets) == 1 else union_events(sets)

    def _count_no_data(self, scenarios: Sequence[Scenario]) -> None:
        seen = set()
        for sc in scenarios:
            m = sc.model
            if m is None or m.latitude_rule or m in seen:
                continue
            seen.add(m)
            n = sum(1 for st in self.bundle.stations.values() if probe_intensity(m, (st.lat, st.lon)) is None)
            if n:
                log.warning("model %s: %d landing stations have no grid data within %g km", m.name, n, m.probe_km)
                self.manifest.warnings[f"no_data_stations:{m.name}"] = n

    def load_impacted(self, path) -> ImpactedSet:
        bundle = self.bundle
        with self.stage("identify"):
            return read_impacted(path, bundle.segments)

    # -- writers -----------------------------------------------------------------

    def write_impacted(self, impacted: ImpactedSet) -> None:
        self.outputs.add(write_impacted(impacted, self.out / "impacted_segments.csv"))

    def write_maps(self) -> None:
        maps = self.maps()
        self.outputs.add(dump_map(maps.cs_nc, self.out / "cs_nc.csv"))
        self.outputs.add(dump_map(maps.cs_as, self.out / "cs_as.csv"))
        self.outputs.add(dump_pc_nc(maps.pc_nc, self.out / "pc_nc.csv"))

    def analyze(self, impacted: ImpactedSet) -> None:
        """Every analysis the config enables."""
        a = self.cfg.analyses
        maps = self.maps()
        bundle = self.bundle
        with self.stage("analyze"):
            self.outputs.add(write_impact(cross_layer_impact(impacted, maps, bundle), self.out / "impact_report.csv"))
            if a.risk:
                self.outputs.add(write_risk(risk_profile(impacted, maps.cs_nc), self.out / "risk_country.csv"))
                self.outputs.add(write_risk(risk_profile(impacted, maps.cs_as), self.out / "risk_asn.csv"))
            if a.interconnect:
                rep = intra_inter_impact(impacted, maps.cs_nc, bundle)
                self.outputs.add(write_interconnect(rep, self.out / "interconnect.csv"))
            if a.connectivity:
                self.outputs.add(write_connectivity(connectivity_stats(maps, bundle), self.out))
            if a.intra_fraction:
                shares = intra_fraction_per_p_country(maps.cs_nc, bundle)
                self.outputs.add(write_intra_fraction(shares, self.out / "intra_fraction.csv"))
        if a.sweep is not None:
            self.sweep(a.sweep)
        if a.cluster is not None:
            self.cluster(a.cluster)
        if a.sensitivity is not None:
            self.sensitivity(a.sensitivity, impacted)

    def sweep(self, spec: SweepSpec) -> None:
        base = self.cfg.scenario
        if base is None or base.model is None:
            raise ConfigError("the probability sweep needs a 'scenario' with an event model")
        identifier = self.identifier
        maps = self.maps()
        with self.stage("sweep"):
            sc = self.models.scenario(base, self.cfg.seed)
            # the sweep replaces the distribution; the root seed anchors its runs
            sc = replace(sc, distribution=FailureDistribution(1.0, sc.distribution.strategy, self.cfg.seed))
            rows = probability_sweep(sc, identifier, maps, spec.probabilities, spec.strategies, spec.runs, self.threads)
            self.outputs.add(write_sweep(rows, self.out / "sweep.csv"))

    def cluster(self, spec: ClusterSpec) -> None:
        maps = self.maps()
        with self.stage("cluster"):
            res = correlation_clusters(maps.pc_nc, spec.cut, spec.features)
            self.outputs.add(write_clusters(res, self.out))

    def sensitivity(self, spec: SensitivitySpec, impacted: ImpactedSet) -> None:
        maps = self.maps(PredictionMode.TOP)
        bundle = self.bundle
        with self.stage("sensitivity"):
            results = [sensitivity_run(bundle, impacted, mix, spec.rounds, self.cfg.seed, maps, self.threads) for mix in spec.mixes]
            self.outputs.add(write_sensitivity(results, self.out / "sensitivity.csv"))

    def finish(self) -> Path:
        for reason, n in sorted(self.summary.dropped.items()):
            self.manifest.warnings[reason] = n
        self.manifest.warnings = dict(sorted(self.manifest.warnings.items()))
        self.manifest.add_outputs(self.outputs.paths)
        return self.manifest.write(self.out)


def run(cfg: RunConfig, out_dir, threads: Optional[int] = None) -> Pipeline:
    """The full pipeline: impacted segments plus every configured analysis."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = Pipeline(cfg, out, "run", threads)
    impacted = p.identify()
    p.write_impacted(impacted)
    p.analyze(impacted)
    p.finish()
    return p


def mixes_from(texts: Sequence[str]) -> tuple[ErrorMix, ...]:
    return tuple(ErrorMix.parse(t) for t in texts)
