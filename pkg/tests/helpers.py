"""Small builders shared by the test modules."""

from __future__ import annotations

import pytest
from hypothesis import strategies as st

from xresil.analysis import connectivity_stats, cross_layer_impact, intra_fraction_per_p_country, intra_inter_impact, risk_profile
from xresil.embedding import embed
from xresil.identify import ImpactedSet
from xresil.ingest import DatasetBundle, normalize_records
from xresil.model import CableSegment, CrossLayerRecord, IpEndpoint, LandingStation, sort_predictions
from xresil.oracles import oracle_connectivity, oracle_impact, oracle_interconnect, oracle_intra_fraction, oracle_risk
from xresil.synth import WorldSpec, generate_world


def seg(cable: str, a: str, b: str) -> CableSegment:
    return CableSegment(cable, a, b)


def ep(ip: str, country=None, asn=None) -> IpEndpoint:
    return IpEndpoint(ip, country, asn)


def rec(a: IpEndpoint, b: IpEndpoint, *preds) -> CrossLayerRecord:
    """``preds`` are segments (score 1.0) or (segment, score) pairs."""
    pairs = [p if isinstance(p, tuple) else (p, 1.0) for p in preds]
    return CrossLayerRecord(a, b, sort_predictions(pairs))


def stations(*rows) -> dict[str, LandingStation]:
    return {r[0]: LandingStation(*r) for r in rows}


def bundle(station_map, records, segments=(), grids=None) -> DatasetBundle:
    return DatasetBundle(station_map, tuple(normalize_records(records)), tuple(segments), dict(grids or {}))


def small_spec(seed: int, **kw) -> WorldSpec:
    base = dict(
        seed=seed,
        n_countries=6,
        n_stations=14,
        n_cables=6,
        n_links=60,
        parallel_cable_groups=1,
        group_size=4,
        ases_per_country=2,
        n_hot_spots=2,
        hot_spot_radius_km=400.0,
        grid_resolution_deg=0.5,
    )
    base.update(kw)
    return WorldSpec(**base)


@st.composite
def small_worlds(draw, max_links: int = 80):
    seed = draw(st.integers(0, 2**31 - 1))
    spec = small_spec(
        seed,
        n_countries=draw(st.integers(1, 8)),
        n_stations=draw(st.integers(2, 16)),
        n_cables=draw(st.integers(1, 8)),
        n_links=draw(st.integers(0, max_links)),
        parallel_cable_groups=draw(st.integers(0, 2)),
        group_size=draw(st.integers(2, 4)),
        unknown_fraction=draw(st.sampled_from([0.0, 0.1, 0.3])),
    )
    return generate_world(spec)


# -- oracle comparison ---------------------------------------------------------


def impacted_of(segs) -> ImpactedSet:
    segs = frozenset(segs)
    return ImpactedSet(segs, frozenset(x for s in segs for x in s.stations))


def assert_matches_oracles(world, impacted, mode):
    maps = embed(world, mode)
    assert cross_layer_impact(impacted, maps, world) == oracle_impact(world, impacted.segments, mode)
    for kind, cs in (("country", maps.cs_nc), ("asn", maps.cs_as)):
        got = risk_profile(impacted, cs)
        want = oracle_risk(world, impacted.segments, mode, kind)
        assert set(got.rows) == set(want)
        for e, r in got.rows.items():
            assert r.total == want[e][1]
            assert r.affected == pytest.approx(want[e][0], abs=1e-12)
    got = intra_inter_impact(impacted, maps.cs_nc, world)
    want = oracle_interconnect(world, impacted.segments, mode)
    assert set(got.rows) == set(want)
    for c, r in got.rows.items():
        ia, it, xa, xt = want[c]
        assert (r.intra_total, r.inter_total) == (it, xt)
        assert r.intra_affected == pytest.approx(ia, abs=1e-12)
        assert r.inter_affected == pytest.approx(xa, abs=1e-12)
    tables = connectivity_stats(maps, world)
    for kind, table in (("country", tables.country), ("asn", tables.asn)):
        want = oracle_connectivity(world, mode, kind)
        assert {e: (u.segments, u.cables, u.stations, u.p_countries) for e, u in table.items()} == want
    shares = intra_fraction_per_p_country(maps.cs_nc, world)
    assert {p: s.fraction for p, s in shares.items()} == pytest.approx(oracle_intra_fraction(world, mode), abs=1e-12)


# -- hand-built identification fixture: 5 grid cells, 4 stations, 6 segments ---

CELLS = [(0.0, 0.0), (0.0, 1.1), (-60.0, 20.5), (10.0, 10.0), (55.0, 10.0)]
GRID_VALUES = {
    # PGA in cm/s^2; MMI after conversion: 7.56, 8.39, 5.80, 9.50, 4.69
    "earthquake": [300.0, 500.0, 100.0, 1000.0, 50.0],
    "hurricane": [30.0, 70.0, 64.0, 120.0, 10.0],
    "sea_rise": [5.0, 0.5, 1.0, -2.0, 0.8],
}
UNITS = {"earthquake": "pga_cm_s2", "hurricane": "knots", "sea_rise": "m_elevation"}


def workflow_fixture():
    """Bundle, default-parameter models and hand-computed impacted segments.

    Station LS2 sits 11.1 km from cell (0, 1.1): inside the 50 km hurricane
    probe, outside the 10 km probes. LS4 is 27.8 km from (-60, 20.5).
    """
    from xresil.hazard import IntensityGrid, build_model

    st_map = stations(
        ("LS1", 0.0, 0.0, "AA"),
        ("LS2", 0.0, 1.0, "BB"),
        ("LS3", 55.0, 10.0, "CC"),
        ("LS4", -60.0, 20.0, "DD"),
    )
    s = {
        "S1": seg("C1", "LS1", "LS2"),
        "S2": seg("C2", "LS2", "LS3"),
        "S3": seg("C3", "LS3", "LS4"),
        "S4": seg("C4", "LS1", "LS4"),
        "S5": seg("C5", "LS2", "LS4"),
        "S6": seg("C6", "LS1", "LS3"),
    }
    records = [
        rec(ep("10.0.0.1", "AA", 1), ep("10.0.0.2", "BB", 2), s["S1"]),
        rec(ep("10.0.0.3", "CC", 3), ep("10.0.0.4", "DD", 4), s["S3"]),
    ]
    models = {}
    for name, values in GRID_VALUES.items():
        grid = IntensityGrid.from_cells([(la, lo, v) for (la, lo), v in zip(CELLS, values)], 0.1, UNITS[name])
        models[name] = build_model(name, grid, convert="pga_to_mmi" if name == "earthquake" else None)
    models["solar"] = build_model("solar", None)
    expected = {
        "earthquake": {"S1", "S4", "S6"},
        "hurricane": {"S1", "S2", "S3", "S4", "S5"},
        "sea_rise": {"S2", "S3", "S6"},
        "solar": {"S2", "S3", "S4", "S5", "S6"},
    }
    b = bundle(st_map, records, s.values())
    return b, models, {k: frozenset(s[x] for x in v) for k, v in expected.items()}


def write_workflow(out_dir) -> tuple:
    """Write the workflow fixture to disk with a four-model multi-event config.

    Returns (config path, expected union of impacted segments).
    """
    import json
    from pathlib import Path

    from xresil.hazard import IntensityGrid
    from xresil.ingest import dump_cross_layer_map, dump_grid, dump_segments, dump_stations

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b, _, expected = workflow_fixture()
    dump_stations(b.stations, out / "stations.csv")
    dump_segments(b.segments, out / "segments.csv")
    dump_cross_layer_map(b.records, out / "crosslayer.jsonl")
    events = []
    for name, values in GRID_VALUES.items():
        grid = IntensityGrid.from_cells([(la, lo, v) for (la, lo), v in zip(CELLS, values)], 0.1, UNITS[name])
        dump_grid(grid, out / f"grid_{name}.csv")
        events.append({"name": name, "model": {"name": name, "grid_file": f"grid_{name}.csv"}})
    events.append({"name": "solar", "model": {"name": "solar"}})
    cfg = {
        "seed": 0,
        "mode": "top",
        "data": {"stations": "stations.csv", "segments": "segments.csv", "crosslayer": "crosslayer.jsonl"},
        "multi_event": events,
    }
    path = out / "config.json"
    path.write_text(json.dumps(cfg, indent=2))
    return path, frozenset().union(*expected.values())
