"""Country correlation trends: Ward's agglomerative clustering over PC-NC data."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..embedding import PcNcMap

log = logging.getLogger(__name__)

RESIDUAL_CLUSTER = 0


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    distance: float
    size: int


def ward_linkage(features: np.ndarray) -> list[Merge]:
    """Agglomerative clustering under Ward's minimum-variance criterion.

    Distances are Euclidean and updated with the Lance-Williams recurrence.
    Leaves are numbered ``0..n-1``; the cluster formed at merge ``k`` gets id
    ``n + k``. Ties go to the lowest (row, column) slot pair, so the result
    depends only on the row order of ``features``.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        return []
    diff = x[:, None, :] - x[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, np.inf)
    size = np.ones(n, dtype=np.int64)
    ident = np.arange(n)
    active = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    merges: list[Merge] = []
    for step in range(n - 1):
        masked = np.where(upper & active[:, None] & active[None, :], d, np.inf)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        dij = float(d[i, j])
        ni, nj = size[i], size[j]
        nk = size
        # Lance-Williams update for Ward, applied to all slots at once
        upd = np.sqrt(
            np.maximum(0.0, ((ni + nk) * d[i] ** 2 + (nj + nk) * d[j] ** 2 - nk * dij**2) / (ni + nj + nk))
        )
        merges.append(Merge(int(min(ident[i], ident[j])), int(max(ident[i], ident[j])), dij, int(ni + nj)))
        d[i, :] = upd
        d[:, i] = upd
        d[i, i] = np.inf
        d[j, :] = np.inf
        d[:, j] = np.inf
        active[j] = False
        size[i] = ni + nj
        ident[i] = n + step
    return merges


def flat_clusters(n: int, merges: Sequence[Merge], threshold: float) -> list[int]:
    """Component label per leaf after applying every merge with distance <= threshold.

    Labels are ``1..k`` numbered by each cluster's lowest leaf index.
    """
    parent = list(range(2 * n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k, m in enumerate(merges):
        node = n + k
        if m.distance <= threshold:
            parent[find(m.left)] = node
            parent[find(m.right)] = node
    roots: dict[int, int] = {}
    labels = []
    for leaf in range(n):
        r = find(leaf)
        if r not in roots:
            roots[r] = len(roots) + 1
        labels.append(roots[r])
    return labels


@dataclass(frozen=True, eq=False)
class ClusterResult:
    countries: tuple[str, ...]
    merges: tuple[Merge, ...]
    labels: Mapping[str, int]
    residual: tuple[str, ...]
    threshold: float
    p_countries: tuple[str, ...] = ()
    vectors: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    features: str = "correlation"

    def cut(self, threshold: float) -> dict[str, int]:
        labels = flat_clusters(len(self.countries), self.merges, threshold)
        out = {c: lab for c, lab in zip(self.countries, labels)}
        out.update({c: RESIDUAL_CLUSTER for c in self.residual})
        return dict(sorted(out.items()))

    def n_clusters(self, threshold: Optional[float] = None) -> int:
        labels = self.labels if threshold is None else self.cut(threshold)
        return len({v for c, v in labels.items() if c not in self.residual})

    def node_name(self, node: int) -> str:
        n = len(self.countries)
        return self.countries[node] if node < n else f"merge:{node - n}"


def pc_nc_vectors(pc_nc: PcNcMap) -> tuple[list[str], list[str], np.ndarray]:
    """Link-count matrix with one row per N-Country and one column per P-Country."""
    n_countries = pc_nc.n_countries()
    p_countries = pc_nc.p_countries()
    col = {p: k for k, p in enumerate(p_countries)}
    row = {n: k for k, n in enumerate(n_countries)}
    m = np.zeros((len(n_countries), len(p_countries)), dtype=np.float64)
    for (p, n), ids in pc_nc.links.items():
        m[row[n], col[p]] = len(ids)
    return n_countries, p_countries, m


def correlation_clusters(
    pc_nc: PcNcMap, distance_threshold: float, features: str = "correlation"
) -> ClusterResult:
    """Group N-Countries by how they use P-Countries' cable infrastructure.

    Each N-Country's link counts over P-Countries are normalized to sum to 1.
    With ``features="correlation"`` each country is then represented by its
    row of the Pearson correlation matrix between those vectors; with
    ``features="normalized"`` the normalized vectors are clustered directly.
    Countries with an all-zero or constant vector (no defined correlation) go
    to the residual cluster 0.
    """
    if features not in ("correlation", "normalized"):
        raise ValueError(f"unknown feature construction {features!r}")
    n_countries, p_countries, m = pc_nc_vectors(pc_nc)
    return cluster_vectors(n_countries, p_countries, m, distance_threshold, features)


def cluster_vectors(
    n_countries: Sequence[str],
    p_countries: Sequence[str],
    counts: np.ndarray,
    distance_threshold: float,
    features: str = "correlation",
) -> ClusterResult:
    order = sorted(range(len(n_countries)), key=lambda k: n_countries[k])
    names = [n_countries[k] for k in order]
    counts = np.asarray(counts, dtype=np.float64)[order] if len(order) else np.zeros((0, len(p_countries)))
    sums = counts.sum(axis=1)
    norm = np.divide(counts, sums[:, None], out=np.zeros_like(counts), where=sums[:, None] > 0)
    degenerate = sums <= 0
    if features == "correlation" and counts.shape[1]:
        degenerate = degenerate | (norm.std(axis=1) <= 1e-15)
    keep = [k for k in range(len(names)) if not degenerate[k]]
    residual = tuple(names[k] for k in range(len(names)) if degenerate[k])
    if residual:
        log.info("%d countries with degenerate vectors placed in the residual cluster", len(residual))
    kept_names = tuple(names[k] for k in keep)
    x = norm[keep]
    if features == "correlation" and len(keep) >= 1:
        x = np.corrcoef(x) if len(keep) > 1 else np.ones((1, 1))
        x = np.atleast_2d(x)
    merges = tuple(ward_linkage(x))
    labels = flat_clusters(len(kept_names), merges, distance_threshold)
    lab = {c: v for c, v in zip(kept_names, labels)}
    lab.update({c: RESIDUAL_CLUSTER for c in residual})
    return ClusterResult(
        countries=kept_names,
        merges=merges,
        labels=dict(sorted(lab.items())),
        residual=residual,
        threshold=distance_threshold,
        p_countries=tuple(p_countries),
        vectors={names[k]: tuple(norm[k].tolist()) for k in range(len(names))},
        features=features,
    )
