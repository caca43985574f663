from __future__ import annotations

from collections import defaultdict

from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import bundle, ep, rec, seg, small_worlds, stations
from xresil.embedding import build_cs_as, build_cs_nc, build_pc_nc, embed, segments_of_p_country
from xresil.model import PredictionMode
from xresil.oracles import oracle_pc_nc

ST = stations(
    ("LS1", 35.0, 139.0, "JP"),
    ("LS2", 34.0, -120.0, "US"),
    ("LS3", 50.0, -5.0, "GB"),
    ("EG1", 31.0, 30.0, "EG"),
    ("EG2", 30.0, 32.5, "EG"),
    ("FR1", 43.0, 5.0, "FR"),
    ("PK1", 25.0, 67.0, "PK"),
)
modes = st.sampled_from([PredictionMode.TOP, PredictionMode.WEIGHTED])


def test_cs_nc_top_keys():
    s = seg("C1", "LS1", "LS2")
    m = build_cs_nc([rec(ep("1.0.0.1", "JP"), ep("1.0.0.2", "US"), s)])
    assert m.get(s, "JP") == {0} and m.get(s, "US") == {0}
    assert m.totals == {"JP": 1, "US": 1}


def test_weighted_four_predictions():
    segs = [seg(f"P{k}", "LS1", "LS2") for k in range(4)]
    r = rec(ep("1.0.0.1", "JP"), ep("1.0.0.2", "US"), *[(s, 0.25) for s in segs])
    m = build_cs_nc([r], PredictionMode.WEIGHTED)
    assert len(m.by_segment) == 4
    assert all(m.weight(s, 0) == 0.25 for s in segs)
    top = build_cs_nc([r], PredictionMode.TOP)
    assert len(top.by_segment) == 1


def test_shared_key_counts_three_links():
    s = seg("C1", "LS1", "LS2")
    recs = [rec(ep(f"1.0.0.{k}", "JP"), ep(f"2.0.0.{k}", "US"), s) for k in range(3)]
    m = build_cs_nc(recs)
    assert m.get(s, "JP") == {k for k, r in enumerate(recs) if "JP" in r.countries()}
    assert len(m.get(s, "JP")) == 3


def test_same_country_link_stored_once():
    s = seg("C1", "LS1", "LS2")
    m = build_cs_nc([rec(ep("1.0.0.1", "JP"), ep("1.0.0.2", "JP"), s)])
    assert m.get(s, "JP") == {0} and m.totals["JP"] == 1


def test_cs_as_unknown_asn():
    s = seg("C1", "LS1", "LS2")
    m = build_cs_as([rec(ep("1.0.0.1", "JP", 64500), ep("1.0.0.2", "US", 64501), s)])
    assert set(m.by_segment[s]) == {64500, 64501}
    m = build_cs_as([rec(ep("1.0.0.1", "JP", 64500), ep("1.0.0.2", "US", None), s)])
    assert set(m.by_segment[s]) == {64500}


def test_pc_nc_examples():
    eg = seg("C1", "EG1", "EG2")
    frpk = seg("C2", "FR1", "PK1")
    recs = [rec(ep("1.0.0.1", "PK"), ep("1.0.0.2", "PK"), eg), rec(ep("2.0.0.1", "YE"), ep("2.0.0.2", "YE"), frpk)]
    b = bundle(ST, recs)
    pc = build_pc_nc(build_cs_nc(b.records), ST)
    assert set(pc.links) == {("EG", "PK"), ("FR", "YE"), ("PK", "YE")}


def test_segments_of_p_country():
    s1, s2 = seg("S1", "LS1", "LS2"), seg("S2", "LS2", "LS3")
    assert segments_of_p_country("US", [s1, s2], ST) == {s1, s2}
    assert segments_of_p_country("FR", [s1, s2], ST) == set()


@given(small_worlds(), modes)
def test_cs_maps_match_brute_force(world, mode):
    for build, attr in ((build_cs_nc, "country"), (build_cs_as, "asn")):
        m = build(world.records, mode)
        expected = defaultdict(set)
        for i, r in enumerate(world.records):
            used = [r.predictions[0][0]] if mode is PredictionMode.TOP else [s for s, _ in r.predictions]
            for e in {getattr(x, attr) for x in r.endpoints} - {None}:
                for s in used:
                    expected[(s, e)].add(i)
        got = {k: set(v) for k, v in m.items()}
        assert got == dict(expected)
        # at most two entities per key per link (a link has two endpoints)
        for d in m.by_segment.values():
            counts = defaultdict(int)
            for ids in d.values():
                for i in ids:
                    counts[i] += 1
            assert all(c <= 2 for c in counts.values())


@given(small_worlds(), modes)
def test_pc_nc_derivable_from_records(world, mode):
    maps = embed(world, mode)
    assert {k: set(v) for k, v in maps.pc_nc.links.items()} == oracle_pc_nc(world, mode)


@settings(max_examples=25)
@given(small_worlds(), st.data())
def test_composition_over_segment_failures(world, data):
    if not world.segments:
        return
    failed = set(data.draw(st.lists(st.sampled_from(world.segments), max_size=8)))
    m = build_cs_nc(world.records)
    per_country = defaultdict(set)
    for s in failed:
        for c, ids in m.by_segment.get(s, {}).items():
            per_country[c] |= ids
    brute = defaultdict(set)
    for i, r in enumerate(world.records):
        if r.top in failed:
            for c in r.countries():
                brute[c].add(i)
    assert dict(per_country) == dict(brute)
