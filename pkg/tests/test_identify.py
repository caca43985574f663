from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import bundle, ep, rec, seg, small_worlds, stations, workflow_fixture
from xresil.errors import DataError, UnknownId
from xresil.hazard import Direction, EventModel, IntensityGrid, build_model
from xresil.identify import (
    FailureDistribution,
    Identifier,
    ImpactedSet,
    ManualFailure,
    PolygonLocator,
    Scenario,
    StationIndex,
    Strategy,
    at_risk_stations,
    candidate_points,
    impacted_segments,
    manual_failure,
    sample_points,
    sample_size,
    union_events,
)
from xresil.model import Region
from xresil.oracles import oracle_candidates, oracle_identify, oracle_inclusion_probabilities


def _model(cells, threshold=6.0, direction=Direction.ABOVE, probe_km=10.0):
    return EventModel("t", IntensityGrid.from_cells(cells, 0.1, "mmi"), threshold, direction, probe_km, "mmi")


def _points(values):
    return [(float(k), 0.0, float(v)) for k, v in enumerate(values)]


def test_candidate_examples():
    m = _model([(0.0, 0.0, 3.0), (1.0, 1.0, 7.0), (2.0, 2.0, 5.0)])
    assert candidate_points(m, Region.global_()) == [(1.0, 1.0, 7.0)]
    assert candidate_points(m, Region.box(-10, 0.5, -10, 10)) == []


def test_sample_top_n_and_exhaustive():
    pts = _points([9, 8, 7, 6, 5])
    got = sample_points(pts, FailureDistribution(0.4, Strategy.TOP_N))
    assert sorted(p[2] for p in got) == [8.0, 9.0]
    for strategy in Strategy:
        dist = FailureDistribution(1.0, strategy, None if strategy is Strategy.TOP_N else 3)
        assert sample_points(pts, dist) == sorted(pts)
    assert sample_points([], FailureDistribution(0.5, Strategy.RANDOM, 1)) == []


def test_sample_size_rounds_up():
    assert sample_size(0.05, 100) == 5
    assert sample_size(0.05, 101) == 6
    assert sample_size(0.001, 10) == 1
    assert sample_size(0.3, 10) == 3  # 0.3 * 10 is 3.0000000000000004 in floats


def test_distribution_needs_seed():
    with pytest.raises(DataError):
        FailureDistribution(0.5, Strategy.RANDOM)
    with pytest.raises(DataError):
        FailureDistribution(0.0)


def test_weighted_sampler_matches_sequential_draws():
    pts = _points([10, 1, 1, 1])
    exact = oracle_inclusion_probabilities([10, 1, 1, 1], 2)
    trials = 2000
    hits = np.zeros(4)
    for seed in range(trials):
        for p in sample_points(pts, FailureDistribution(0.5, Strategy.WEIGHTED, seed)):
            hits[int(p[0])] += 1
    assert np.allclose(hits / trials, exact, atol=0.04)


def test_inclusion_oracle_hand_value():
    # P(10 drawn in two draws) = 10/13 + 3 * (1/13) * (10/12)
    assert oracle_inclusion_probabilities([10, 1, 1, 1], 2)[0] == pytest.approx(10 / 13 + 30 / 156)


@given(st.integers(0, 2**32 - 1), st.sampled_from([Strategy.RANDOM, Strategy.WEIGHTED]))
def test_sampling_deterministic_given_seed(seed, strategy):
    pts = _points([5, 9, 7, 6, 8, 6.5])
    dist = FailureDistribution(0.5, strategy, seed)
    assert sample_points(pts, dist) == sample_points(list(reversed(pts)), dist)


def test_at_risk_station_examples():
    st_map = stations(("A", 0.0, 0.0, "AA"), ("B", 0.0, 1.0, "BB"))
    assert at_risk_stations([(0.0, 0.0, 9.0)], st_map, 10.0) == {"A"}
    assert at_risk_stations([(0.0, 0.0, 9.0)], st_map, 112.0) == {"A", "B"}


def test_impacted_segment_examples():
    s, t = seg("S", "LS1", "LS2"), seg("T", "LS3", "LS4")
    assert impacted_segments({"LS1"}, [s, t]).segments == {s}
    assert impacted_segments(set(), [s, t]).segments == frozenset()


@given(st.sets(st.sampled_from(["A", "B", "C", "D", "E"])), st.data())
def test_impacted_segments_linear_scan(hit, data):
    pairs = data.draw(st.lists(st.tuples(st.sampled_from("ABCDE"), st.sampled_from("ABCDE")), max_size=12))
    universe = {seg(f"K{k}", a, b) for k, (a, b) in enumerate(pairs) if a != b}
    got = impacted_segments(hit, universe).segments
    assert got == {s for s in universe if s.station_a in hit or s.station_b in hit}


def test_impacted_set_invariant():
    with pytest.raises(DataError):
        ImpactedSet(frozenset({seg("S", "A", "B")}), frozenset({"C"}))


def test_union_examples():
    s1, s2, s3 = seg("C", "A", "B"), seg("C", "B", "C"), seg("C", "C", "D")

    def mk(*segs):
        return ImpactedSet(frozenset(segs), frozenset(x for s in segs for x in s.stations))

    assert union_events([mk(s1, s2), mk(s2, s3)]).segments == {s1, s2, s3}
    x = mk(s1, s3)
    assert union_events([x, ImpactedSet()]) == union_events([x])
    a, b, c = mk(s1), mk(s2), mk(s3)
    assert union_events([a, b]) == union_events([b, a])
    assert union_events([union_events([a, b]), c]) == union_events([a, union_events([b, c])])


def _manual_world():
    st_map = stations(
        ("AL-HUDAYDAH", 14.8, 42.9, "YE"),
        ("MARSEILLE", 43.3, 5.4, "FR"),
        ("KARACHI", 24.8, 67.0, "PK"),
        ("DJIBOUTI", 11.6, 43.1, "DJ"),
    )
    segs = [
        seg("SEAMEWE5", "MARSEILLE", "KARACHI"),
        seg("SEAMEWE5", "KARACHI", "DJIBOUTI"),
        seg("FLAG", "AL-HUDAYDAH", "DJIBOUTI"),
        seg("AAE1", "AL-HUDAYDAH", "KARACHI"),
    ]
    r = rec(ep("10.0.0.1", "YE", 1), ep("10.0.0.2", "PK", 2), segs[3])
    return bundle(st_map, [r], segs), segs


def test_manual_failure_examples():
    b, segs = _manual_world()
    got = manual_failure(ManualFailure(stations=("AL-HUDAYDAH",)), b)
    assert got.segments == {segs[2], segs[3]}
    cut = ManualFailure(cable_segments={"SEAMEWE5": (("MARSEILLE", "KARACHI"),)})
    assert manual_failure(cut, b).segments == {segs[0]}
    assert manual_failure(ManualFailure(cables=("SEAMEWE5",)), b).segments == {segs[0], segs[1]}
    assert manual_failure(ManualFailure(), b).segments == frozenset()
    with pytest.raises(UnknownId):
        manual_failure(ManualFailure(stations=("ATLANTIS",)), b)
    with pytest.raises(UnknownId):
        manual_failure(ManualFailure(cables=("NOPE",)), b)


def test_four_default_models_on_hand_fixture():
    b, models, expected = workflow_fixture()
    ident = Identifier(b)
    for name, model in models.items():
        assert ident.identify(Scenario(model)).segments == expected[name], name


def test_countries_region_nearest_station_and_polygons(tmp_path):
    st_map = stations(("A", 0.0, 0.0, "AA"), ("B", 0.0, 5.0, "BB"))
    b = bundle(st_map, [rec(ep("10.0.0.1"), ep("10.0.0.2"), seg("C", "A", "B"))])
    m = _model([(0.0, 0.5, 9.0), (0.0, 4.5, 9.0)], probe_km=100.0)
    ident = Identifier(b)
    got = ident.identify(Scenario(m, region=Region.of_countries(["AA"])))
    assert got.stations == {"A"}
    # a polygon file reassigns the western half-plane
    poly = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"iso_a2": "BB"},
                "geometry": {"type": "Polygon", "coordinates": [[[0.2, -1], [6, -1], [6, 1], [0.2, 1], [0.2, -1]]]},
            }
        ],
    }
    path = tmp_path / "poly.geojson"
    path.write_text(json.dumps(poly))
    ident = Identifier(b, PolygonLocator(path))
    assert ident.identify(Scenario(m, region=Region.of_countries(["AA"]))).segments == frozenset()
    assert ident.identify(Scenario(m, region=Region.of_countries(["BB"]))).stations == {"A", "B"}


def _world_model(world, threshold=6.0, probe_km=200.0):
    return build_model("hazard", world.grids["hazard"], threshold, "above", probe_km)


regions = st.sampled_from(
    [Region.global_(), Region.box(-30, 30, -90, 90), Region.of_countries(["JP", "US", "GB"]), Region.of_countries(["FR"])]
)


@settings(max_examples=30)
@given(small_worlds(), regions, st.sampled_from([0.05, 0.3, 1.0]), st.sampled_from([5.0, 6.0, 8.0]))
def test_identify_matches_brute_force(world, region, p, threshold):
    model = _world_model(world, threshold)
    ident = Identifier(world)
    assert candidate_points(model, region, world.stations, ident.index) == oracle_candidates(world, model, region)
    got = ident.identify(Scenario(model, FailureDistribution(p), region)).segments
    assert got == oracle_identify(world, model, region, p)


@settings(max_examples=20)
@given(small_worlds())
def test_top_n_monotone_in_p(world):
    model = _world_model(world)
    ident = Identifier(world)
    prev = frozenset()
    for p in np.linspace(0.05, 1.0, 20):
        cur = ident.identify(Scenario(model, FailureDistribution(float(p)))).segments
        assert prev <= cur
        prev = cur


@settings(max_examples=15)
@given(small_worlds(), st.integers(0, 1000))
def test_full_probability_equal_across_strategies(world, seed):
    model = _world_model(world)
    ident = Identifier(world)
    base = ident.identify(Scenario(model))
    for strategy in (Strategy.RANDOM, Strategy.WEIGHTED):
        got = ident.identify(Scenario(model, FailureDistribution(1.0, strategy, seed)))
        assert got == base


def test_station_index_matches_haversine_scan():
    rng = np.random.default_rng(4)
    st_map = stations(*[(f"S{k}", float(rng.uniform(-80, 80)), float(rng.uniform(-180, 180)), "AA") for k in range(200)])
    idx = StationIndex(st_map)
    from xresil.hazard import haversine_km

    for _ in range(30):
        p = (float(rng.uniform(-80, 80)), float(rng.uniform(-180, 180)))
        km = float(rng.uniform(10, 2000))
        brute = {k for k, s in st_map.items() if haversine_km(p, (s.lat, s.lon)) <= km}
        assert idx.within([p], km) == brute
