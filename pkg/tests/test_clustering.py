from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage

from xresil.analysis.clustering import RESIDUAL_CLUSTER, cluster_vectors, correlation_clusters, flat_clusters, ward_linkage
from xresil.embedding import PcNcMap
from xresil.model import PredictionMode

CODES = [f"{a}{b}" for a in "ABCDEFGH" for b in "ABCDEFGH"]


def block_counts(k: int, per_block: int, p_per_block: int, rng) -> tuple[list[str], list[str], np.ndarray]:
    """N-Countries in k disjoint blocks, each using its own set of P-Countries."""
    n = k * per_block
    m = np.zeros((n, k * p_per_block))
    for i in range(n):
        b = i // per_block
        m[i, b * p_per_block : (b + 1) * p_per_block] = rng.integers(1, 50, size=p_per_block)
    return CODES[:n], [f"P{j:02d}" for j in range(m.shape[1])], m


def partition(labels: dict[str, int]) -> set[frozenset[str]]:
    groups: dict[int, set[str]] = {}
    for c, lab in labels.items():
        groups.setdefault(lab, set()).add(c)
    return {frozenset(g) for g in groups.values()}


@settings(max_examples=30)
@given(st.integers(2, 12), st.integers(1, 6), st.integers(0, 2**31))
def test_ward_matches_scipy(n, d, seed):
    x = np.random.default_rng(seed).normal(size=(n, d))
    merges = ward_linkage(x)
    ref = linkage(x, method="ward")
    assert len(merges) == n - 1
    ours = np.array([m.distance for m in merges])
    assert ours == pytest.approx(ref[:, 2], rel=1e-9, abs=1e-12)
    assert [m.size for m in merges] == ref[:, 3].astype(int).tolist()
    for t in np.unique(ref[:, 2]):
        cut = t * (1 + 1e-9)
        ours_p = partition(dict(zip(map(str, range(n)), flat_clusters(n, merges, cut))))
        ref_p = partition(dict(zip(map(str, range(n)), fcluster(ref, cut, criterion="distance"))))
        assert ours_p == ref_p


def test_identical_vectors_merge_at_zero():
    m = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [5.0, 1.0, 0.0]])
    res = cluster_vectors(["AA", "BB", "CC"], ["P1", "P2", "P3"], m, 0.5)
    first = res.merges[0]
    assert first.distance == pytest.approx(0.0, abs=1e-12)
    assert {res.node_name(first.left), res.node_name(first.right)} == {"AA", "BB"}


@pytest.mark.parametrize("k", [2, 3, 4])
def test_block_structure_recovered(k):
    rng = np.random.default_rng(k)
    names, ps, m = block_counts(k, 4, 3, rng)
    res = cluster_vectors(names, ps, m, 0.0)
    d = np.array([x.distance for x in res.merges])
    # k-1 inter-block merges come last; cut anywhere between the two regimes
    intra_max, inter_min = d[: len(d) - (k - 1)].max(), d[len(d) - (k - 1) :].min()
    assert intra_max < inter_min
    labels = res.cut((intra_max + inter_min) / 2)
    blocks = {frozenset(names[b * 4 : (b + 1) * 4]) for b in range(k)}
    assert partition(labels) == blocks


def test_cluster_count_non_increasing_in_threshold():
    rng = np.random.default_rng(9)
    names, ps, m = block_counts(3, 5, 4, rng)
    m = m + rng.integers(0, 3, size=m.shape)
    res = cluster_vectors(names, ps, m, 0.0)
    top = max(x.distance for x in res.merges) * 1.1
    counts = [res.n_clusters(t) for t in np.linspace(0.0, top, 50)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] == 1


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.permutations(range(8)))
def test_partition_invariant_under_input_order(seed, perm):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 20, size=(8, 5)).astype(float) + 1
    names = CODES[:8]
    base = cluster_vectors(names, ["P"] * 5, m, 1.0)
    shuffled = cluster_vectors([names[i] for i in perm], ["P"] * 5, m[list(perm)], 1.0)
    assert base.labels == shuffled.labels


def test_degenerate_vectors_go_to_residual():
    links = {
        ("P1", "AA"): frozenset({1, 2}),
        ("P2", "AA"): frozenset({3}),
        ("P1", "BB"): frozenset({4}),
        ("P2", "BB"): frozenset({5, 6, 7}),
        ("P1", "CC"): frozenset({8}),
        ("P2", "CC"): frozenset({9}),  # constant vector: correlation undefined
        ("P1", "DD"): frozenset({10, 11}),
        ("P2", "DD"): frozenset({12}),
    }
    res = correlation_clusters(PcNcMap(PredictionMode.TOP, links), 0.5)
    assert res.labels["CC"] == RESIDUAL_CLUSTER
    assert "CC" in res.residual and "CC" not in res.countries
    assert len(res.merges) == len(res.countries) - 1
    assert res.labels["AA"] == res.labels["DD"] != RESIDUAL_CLUSTER
    normalized = correlation_clusters(PcNcMap(PredictionMode.TOP, links), 0.5, features="normalized")
    assert "CC" not in normalized.residual
