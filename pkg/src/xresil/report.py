"""Deterministic CSV report writers and the run manifest.

Rows are sorted by each table's leading key columns; floats are written with
``repr`` so values round-trip exactly. Nothing time- or order-dependent ends
up in a CSV.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from .analysis.clustering import ClusterResult
from .analysis.impact import COMPONENTS, ImpactReport, InterconnectReport, RiskProfile
from .analysis.sensitivity import SensitivityResult
from .analysis.stats import ConnectivityTables, IntraShare
from .analysis.sweep import SweepRow
from .errors import ParseError, UnknownId
from .identify import ImpactedSet
from .ingest import PathLike, _open_csv
from .model import CableSegment

IMPACTED_HEADER = ["cable", "station_a", "station_b"]


def fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_impact(report: ImpactReport, path: PathLike) -> Path:
    # declared component order, not alphabetical: it is the table's key
    rows = [(name, c.impacted, c.total, c.fraction) for name, c in report.rows()]
    return write_csv(path, ["component", "impacted", "total", "fraction"], rows)


def write_risk(profile: RiskProfile, path: PathLike) -> Path:
    rows = [(e, r.affected, r.total, r.fraction) for e, r in profile.sorted_rows()]
    return write_csv(path, ["entity", "affected", "total", "fraction"], rows)


def write_interconnect(report: InterconnectReport, path: PathLike) -> Path:
    header = ["country", "intra_affected", "intra_total", "intra_fraction", "inter_affected", "inter_total", "inter_fraction"]
    rows = [
        (c, r.intra_affected, r.intra_total, r.intra_fraction, r.inter_affected, r.inter_total, r.inter_fraction)
        for c, r in sorted(report.rows.items())
    ]
    return write_csv(path, header, rows)


def write_connectivity(tables: ConnectivityTables, out_dir: PathLike) -> list[Path]:
    out = Path(out_dir)
    header = ["entity", "segments", "cables", "stations", "p_countries"]
    paths = []
    for kind, table in (("country", tables.country), ("asn", tables.asn)):
        rows = [(e, u.segments, u.cables, u.stations, u.p_countries) for e, u in sorted(table.items())]
        paths.append(write_csv(out / f"connectivity_{kind}.csv", header, rows))
    paths.append(write_csv(out / "own_cable_reach.csv", ["country", "reach"], sorted(tables.own_cable_reach.items())))
    return paths


def write_intra_fraction(shares: Mapping[str, IntraShare], path: PathLike) -> Path:
    rows = [(p, s.intra, s.resolvable, s.fraction) for p, s in sorted(shares.items())]
    return write_csv(path, ["p_country", "intra", "resolvable", "fraction"], rows)


def write_sweep(rows: Sequence[SweepRow], path: PathLike) -> Path:
    comp_rank = {c: k for k, c in enumerate(COMPONENTS)}
    ordered = sorted(rows, key=lambda r: (r.p, r.strategy.value, comp_rank[r.component]))
    return write_csv(
        path, ["p", "strategy", "component", "mean_fraction"], [(r.p, r.strategy.value, r.component, r.mean_fraction) for r in ordered]
    )


def write_clusters(result: ClusterResult, out_dir: PathLike) -> list[Path]:
    out = Path(out_dir)
    p1 = write_csv(out / "clusters.csv", ["country", "cluster_id"], sorted(result.labels.items()))
    rows = [
        (k, result.node_name(m.left), result.node_name(m.right), m.distance, m.size) for k, m in enumerate(result.merges)
    ]
    p2 = write_csv(out / "dendrogram.csv", ["merge_idx", "left", "right", "distance", "size"], rows)
    return [p1, p2]


def write_sensitivity(results: Sequence[SensitivityResult], path: PathLike) -> Path:
    rows = []
    for res in sorted(results, key=lambda r: r.mix.label()):
        means = res.mean_fractions()
        rows.extend((res.mix.label(), comp, means[comp]) for comp in COMPONENTS)
    return write_csv(path, ["mix", "component", "mean_fraction"], rows)


def write_impacted(impacted: ImpactedSet, path: PathLike) -> Path:
    rows = [(s.cable_id, s.station_a, s.station_b) for s in impacted.sorted_segments()]
    return write_csv(path, IMPACTED_HEADER, rows)


def read_impacted(path: PathLike, universe: Iterable[CableSegment]) -> ImpactedSet:
    """Read an impacted-segments file; every segment must exist in ``universe``.

    Raises:
        UnknownId: a segment absent from the universe.
    """
    known = set(universe)
    segs: set[CableSegment] = set()
    fh, reader = _open_csv(path, IMPACTED_HEADER)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(lineno, f"expected 3 fields, got {len(row)}", str(path))
            seg = CableSegment(*(c.strip() for c in row))
            if seg not in known:
                raise UnknownId("segment", str(seg))
            segs.add(seg)
    stations = frozenset(sid for s in segs for sid in s.stations)
    return ImpactedSet(frozenset(segs), stations)


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to re-run and verify a run.

    Timings are informative only; they are the one field expected to differ
    between identical runs.
    """

    command: str
    version: str
    config_sha256: Optional[str] = None
    config: Optional[dict] = None
    inputs: dict[str, str] = field(default_factory=dict)
    seed_schedule: dict = field(default_factory=dict)
    timings_s: dict[str, float] = field(default_factory=dict)
    warnings: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    def add_inputs(self, paths: Mapping[str, Path]) -> None:
        for name, p in sorted(paths.items()):
            self.inputs[name] = sha256_file(p)

    def add_outputs(self, paths: Iterable[Path]) -> None:
        for p in sorted(paths, key=lambda q: q.name):
            self.outputs[p.name] = sha256_file(p)

    def write(self, out_dir: PathLike) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
