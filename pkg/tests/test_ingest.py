from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings

from helpers import small_worlds
from xresil.errors import DuplicateStation, EmptyPredictions, ParseError, RangeError
from xresil.ingest import (
    LoadSummary,
    dump_cross_layer_map,
    dump_grid,
    dump_segments,
    dump_stations,
    load_bundle,
    load_cross_layer_map,
    load_intensity_grid,
    load_segments,
    load_stations,
    record_line,
)
from xresil.model import CableSegment

STATIONS = "id,lat,lon,country\nLS1,35.0,139.5,JP\nLS2,34.0,-120.0,US\nLS3,50.0,-5.0,GB\n"


def _line(preds, a="1.1.1.1", b="2.2.2.2"):
    return json.dumps(
        {
            "a": {"ip": a, "country": "JP", "asn": 64500, "lat": None, "lon": None},
            "b": {"ip": b, "country": "US", "asn": 64501, "lat": None, "lon": None},
            "pred": [{"cable": c, "sa": sa, "sb": sb, "score": s} for c, sa, sb, s in preds],
        }
    )


@pytest.fixture
def station_file(tmp_path):
    p = tmp_path / "stations.csv"
    p.write_text(STATIONS)
    return p


def test_load_stations(station_file):
    st = load_stations(station_file)
    assert st["LS1"].country == "JP" and st["LS1"].lat == 35.0 and st["LS1"].lon == 139.5
    assert len(st) == 3


def test_load_stations_range_and_duplicates(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("id,lat,lon,country\nLS1,95.0,139.5,JP\n")
    with pytest.raises(RangeError):
        load_stations(p)
    p.write_text("id,lat,lon,country\nLS1,35.0,139.5,JP\nLS1,35.0,139.5,JP\n")
    with pytest.raises(DuplicateStation):
        load_stations(p)
    p.write_text("id,lat,lon\nLS1,35.0,139.5\n")
    with pytest.raises(ParseError):
        load_stations(p)


def test_predictions_sorted_on_load(tmp_path, station_file):
    st = load_stations(station_file)
    p = tmp_path / "x.jsonl"
    p.write_text(_line([("C1", "LS1", "LS2", 0.9), ("C2", "LS2", "LS3", 0.4)]) + "\n")
    (r,) = load_cross_layer_map(p, st)
    assert [s for _, s in r.predictions] == [0.9, 0.4]
    p.write_text(_line([("C1", "LS1", "LS2", 0.4), ("C2", "LS3", "LS2", 0.9)]) + "\n")
    (r,) = load_cross_layer_map(p, st)
    assert [s for _, s in r.predictions] == [0.9, 0.4]
    assert r.top == CableSegment("C2", "LS2", "LS3")


def test_empty_predictions_and_parse_errors(tmp_path, station_file):
    st = load_stations(station_file)
    p = tmp_path / "x.jsonl"
    p.write_text(_line([]) + "\n")
    with pytest.raises(EmptyPredictions) as exc:
        load_cross_layer_map(p, st)
    assert exc.value.line == 1
    p.write_text(_line([("C1", "LS1", "LS2", 0.9)]) + "\n{not json\n")
    with pytest.raises(ParseError) as exc:
        load_cross_layer_map(p, st)
    assert exc.value.line == 2


def test_unknown_station_records_dropped_and_counted(tmp_path, station_file):
    st = load_stations(station_file)
    p = tmp_path / "x.jsonl"
    p.write_text(
        _line([("C1", "LS1", "LS2", 0.9)]) + "\n" + _line([("C9", "LS1", "LS404", 0.9)], "3.3.3.3", "4.4.4.4") + "\n"
    )
    summary = LoadSummary()
    recs = load_cross_layer_map(p, st, summary)
    assert len(recs) == 1
    assert summary.dropped["unknown_station"] == 1


def test_duplicate_links_collapse(tmp_path, station_file):
    st = load_stations(station_file)
    p = tmp_path / "x.jsonl"
    one = _line([("C1", "LS1", "LS2", 0.9)])
    two = _line([("C2", "LS2", "LS3", 0.9)], "2.2.2.2", "1.1.1.1")
    summary = LoadSummary()
    p.write_text(one + "\n" + two + "\n")
    a = load_cross_layer_map(p, st, summary)
    p.write_text(two + "\n" + one + "\n")
    b = load_cross_layer_map(p, st)
    assert len(a) == 1 and a == b
    assert summary.dropped["duplicate_link"] == 1


def test_grid_load_and_max_merge(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("lat,lon,value\n0.0,0.0,5.2\n0.1,0.0,6.1\n")
    g = load_intensity_grid(p, "mmi")
    assert len(g) == 2
    p.write_text("lat,lon,value\n0.0,0.0,5.2\n0.0,0.0,7.0\n")
    g = load_intensity_grid(p, "mmi")
    assert len(g) == 1 and g.cells() == [(0.0, 0.0, 7.0)]
    p.write_text("lat,lon,value\n91.0,0.0,5.2\n")
    with pytest.raises(RangeError):
        load_intensity_grid(p)
    p.write_text("lat,lon,value\n0.05,0.0,5.2\n")
    with pytest.raises(ParseError):
        load_intensity_grid(p)


def test_segments_file_drops_unknown_stations(tmp_path, station_file):
    st = load_stations(station_file)
    p = tmp_path / "segments.csv"
    p.write_text("cable,station_a,station_b\nC1,LS2,LS1\nC2,LS1,LS99\n")
    summary = LoadSummary()
    segs = load_segments(p, st, summary)
    assert segs == [CableSegment("C1", "LS1", "LS2")]
    assert summary.total == 1


@settings(max_examples=15)
@given(small_worlds())
def test_round_trip_and_order_independence(tmp_path_factory, world):
    d = tmp_path_factory.mktemp("rt")
    dump_stations(world.stations, d / "stations.csv")
    dump_segments(world.segments, d / "segments.csv")
    dump_cross_layer_map(world.records, d / "crosslayer.jsonl")
    dump_grid(world.grids["hazard"], d / "grid.csv")
    loaded = load_bundle(d / "stations.csv", d / "crosslayer.jsonl", d / "segments.csv")
    assert loaded.records == world.records
    assert loaded.segments == world.segments
    assert dict(loaded.stations) == dict(world.stations)
    grid = load_intensity_grid(d / "grid.csv", "mmi", world.grids["hazard"].resolution_deg)
    assert grid.same_as(world.grids["hazard"])
    # serialize(load(x)) == x for canonical input
    dump_cross_layer_map(loaded.records, d / "again.jsonl")
    assert (d / "again.jsonl").read_bytes() == (d / "crosslayer.jsonl").read_bytes()
    # permuting lines gives the same dataset
    lines = (d / "crosslayer.jsonl").read_text().splitlines()
    random.Random(0).shuffle(lines)
    (d / "shuffled.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""))
    shuffled = load_cross_layer_map(d / "shuffled.jsonl", loaded.stations)
    assert tuple(shuffled) == loaded.records
    assert all(record_line(r) for r in shuffled)
