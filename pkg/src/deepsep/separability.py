"""Cluster-validity indices and their fusion into a single separability score.

Three internal indices quantify how well label groups separate in a feature
space: the Calinski-Harabasz variance ratio (higher is better), the
Davies-Bouldin dispersion/centroid-distance ratio (lower is better), and the
Silhouette width (higher is better). Per layer the three are min-max
normalized over a declared set of (network, layer) rows and averaged into the
separability score

    dsi = (ch' + (1 - db') + s') / 3

which lands in [0, 1]. All centroid/variance sums use the population
convention (divide by n) and float64 arithmetic; distances are Euclidean.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from deepsep.errors import (CoincidentCentroids, ConstantIndex, DegenerateWithin,
                            KeyMismatch)


@dataclass(frozen=True)
class ClusteredSet:
    """N same-dimension vectors with cluster labels 0..K-1; every cluster non-empty."""

    vectors: np.ndarray
    labels: np.ndarray
    label_names: tuple

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        lab = np.asarray(self.labels, dtype=np.int64)
        if v.ndim != 2:
            raise ValueError(f"vectors must be (N, d), got shape {v.shape}")
        if lab.shape != (v.shape[0],):
            raise ValueError("labels must align with vectors")
        if not np.all(np.isfinite(v)):
            raise ValueError("vectors contain non-finite values")
        k = len(self.label_names)
        if k < 2:
            raise ValueError("need at least two clusters")
        if v.shape[0] <= k:
            raise ValueError(f"need more samples ({v.shape[0]}) than clusters ({k})")
        present = np.bincount(lab, minlength=k)
        if lab.min(initial=0) < 0 or lab.max(initial=0) >= k or np.any(present == 0):
            raise ValueError("every cluster id in 0..K-1 must be non-empty")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_labeled(cls, vectors: np.ndarray, labels: Sequence) -> "ClusteredSet":
        """Build from arbitrary hashable labels; cluster ids follow sorted label order."""
        names = tuple(sorted(set(labels), key=str))
        index = {name: i for i, name in enumerate(names)}
        ids = np.array([index[l] for l in labels], dtype=np.int64)
        return cls(vectors=np.asarray(vectors, dtype=np.float64), labels=ids, label_names=names)

    @property
    def k(self) -> int:
        return len(self.label_names)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def members(self, cluster: int) -> np.ndarray:
        return self.vectors[self.labels == cluster]


@dataclass(frozen=True)
class IndexTriple:
    ch: float
    db: float
    s: float


def calinski_harabasz(cs: ClusteredSet) -> float:
    """Between/within variance ratio scaled by (N-K)/(K-1)."""
    grand = cs.vectors.mean(axis=0)
    ss_w = 0.0
    ss_b = 0.0
    for k in range(cs.k):
        members = cs.members(k)
        center = members.mean(axis=0)
        ss_w += float(((members - center) ** 2).sum())
        ss_b += len(members) * float(((center - grand) ** 2).sum())
    if ss_w == 0.0:
        raise DegenerateWithin("within-cluster scatter is zero")
    return (ss_b / ss_w) * ((cs.n - cs.k) / (cs.k - 1))


def davies_bouldin(cs: ClusteredSet) -> float:
    """Mean over clusters of the worst (delta_k + delta_k') / centroid-distance ratio."""
    centers = np.stack([cs.members(k).mean(axis=0) for k in range(cs.k)])
    dispersion = np.array([
        float(np.linalg.norm(cs.members(k) - centers[k], axis=1).mean())
        for k in range(cs.k)
    ])
    dist = cdist(centers, centers)
    off_diag = dist[~np.eye(cs.k, dtype=bool)]
    if np.any(off_diag == 0.0):
        raise CoincidentCentroids("two cluster centroids coincide")
    worst = np.empty(cs.k)
    for k in range(cs.k):
        ratios = [
            (dispersion[k] + dispersion[j]) / dist[k, j]
            for j in range(cs.k) if j != k
        ]
        worst[k] = max(ratios)
    return float(worst.mean())


def silhouette(cs: ClusteredSet) -> float:
    """Mean silhouette width, averaged within each cluster then across clusters.

    Width of a sample is (b - a) / max(a, b) with a the mean distance to the
    rest of its own cluster and b the smallest mean distance to another
    cluster; samples in singleton clusters contribute width 0.
    """
    dist = cdist(cs.vectors, cs.vectors)
    cluster_means = np.empty(cs.k)
    sizes = np.array([int((cs.labels == k).sum()) for k in range(cs.k)])
    # mean distance of every sample to each cluster, computed once
    to_cluster = np.stack([
        dist[:, cs.labels == k].sum(axis=1) / sizes[k] for k in range(cs.k)
    ], axis=1)
    for k in range(cs.k):
        idx = np.flatnonzero(cs.labels == k)
        if sizes[k] == 1:
            cluster_means[k] = 0.0
            continue
        # own-cluster mean excludes the sample itself
        a = to_cluster[idx, k] * sizes[k] / (sizes[k] - 1)
        others = [j for j in range(cs.k) if j != k]
        b = to_cluster[idx][:, others].min(axis=1)
        widths = (b - a) / np.maximum(a, b)
        cluster_means[k] = float(widths.mean())
    return float(cluster_means.mean())


def index_triple(cs: ClusteredSet) -> IndexTriple:
    return IndexTriple(ch=calinski_harabasz(cs), db=davies_bouldin(cs), s=silhouette(cs))


def dsi(ch_norm: float, db_norm: float, s_norm: float) -> float:
    """Fuse normalized indices; each input in [0, 1], result in [0, 1]."""
    for name, v in (("ch_norm", ch_norm), ("db_norm", db_norm), ("s_norm", s_norm)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    return (ch_norm + (1.0 - db_norm) + s_norm) / 3.0


# --- the per-layer score table ---

@dataclass(frozen=True)
class DsiRow:
    network: str
    layer: str
    raw: IndexTriple
    ch_norm: float
    db_norm: float
    s_norm: float
    dsi: float


@dataclass(frozen=True)
class DsiTable:
    """Raw and normalized index triples per (network, layer).

    `normalization_set` records exactly which rows defined the min-max ranges;
    scores from tables with different normalization sets are not comparable.
    """

    rows: tuple
    normalization_set: tuple

    def row(self, network: str, layer: str) -> DsiRow:
        for r in self.rows:
            if (r.network, r.layer) == (network, layer):
                return r
        raise KeyError(f"no row for ({network}, {layer})")

    def best_per_network(self) -> dict:
        best = {}
        for r in self.rows:
            cur = best.get(r.network)
            if cur is None or r.dsi > cur.dsi:
                best[r.network] = r
        return best

    # --- serialization ---

    def save_csv(self, path: str | Path, provenance: Optional[str] = None) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            if provenance:
                fh.write(f"# {provenance}\n")
            w = csv.writer(fh)
            w.writerow(["network", "layer", "ch", "db", "s", "ch_norm", "db_norm", "s_norm", "dsi"])
            for r in self.rows:
                w.writerow([r.network, r.layer,
                            repr(r.raw.ch), repr(r.raw.db), repr(r.raw.s),
                            repr(r.ch_norm), repr(r.db_norm), repr(r.s_norm), repr(r.dsi)])
        tmp.replace(path)

    def save_json(self, path: str | Path, provenance: Optional[dict] = None) -> None:
        payload = {
            "normalization_set": [list(k) for k in self.normalization_set],
            "rows": [
                {
                    "network": r.network, "layer": r.layer,
                    "ch": r.raw.ch, "db": r.raw.db, "s": r.raw.s,
                    "ch_norm": r.ch_norm, "db_norm": r.db_norm, "s_norm": r.s_norm,
                    "dsi": r.dsi,
                }
                for r in self.rows
            ],
        }
        if provenance:
            payload["provenance"] = provenance
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2) + "\n")
        tmp.replace(path)

    @classmethod
    def load_json(cls, path: str | Path) -> "DsiTable":
        payload = json.loads(Path(path).read_text())
        rows = tuple(
            DsiRow(network=r["network"], layer=r["layer"],
                   raw=IndexTriple(ch=r["ch"], db=r["db"], s=r["s"]),
                   ch_norm=r["ch_norm"], db_norm=r["db_norm"], s_norm=r["s_norm"],
                   dsi=r["dsi"])
            for r in payload["rows"]
        )
        norm_set = tuple(tuple(k) for k in payload["normalization_set"])
        return cls(rows=rows, normalization_set=norm_set)


def normalize_indices(raw: dict) -> DsiTable:
    """Min-max normalize raw triples over all given (network, layer) keys and fuse.

    `raw` maps (network, layer) -> IndexTriple. Each of the three indices is
    normalized independently over the whole table; a constant index makes the
    normalization undefined.
    """
    keys = list(raw.keys())
    if len(keys) < 2:
        raise ConstantIndex("need at least two (network, layer) rows to normalize")
    chs = np.array([raw[k].ch for k in keys], dtype=np.float64)
    dbs = np.array([raw[k].db for k in keys], dtype=np.float64)
    ss = np.array([raw[k].s for k in keys], dtype=np.float64)
    rows = []
    for name, vals in (("ch", chs), ("db", dbs), ("s", ss)):
        if vals.max() == vals.min():
            raise ConstantIndex(f"index {name!r} is constant over the table")
    for i, (network, layer) in enumerate(keys):
        ch_n = float((chs[i] - chs.min()) / (chs.max() - chs.min()))
        db_n = float((dbs[i] - dbs.min()) / (dbs.max() - dbs.min()))
        s_n = float((ss[i] - ss.min()) / (ss.max() - ss.min()))
        rows.append(DsiRow(network=network, layer=layer, raw=raw[(network, layer)],
                           ch_norm=ch_n, db_norm=db_n, s_norm=s_n,
                           dsi=dsi(ch_n, db_n, s_n)))
    return DsiTable(rows=tuple(rows), normalization_set=tuple(keys))


# --- PCA ---

@dataclass(frozen=True)
class PcaModel:
    """Mean vector, orthonormal component rows, and per-component population variances."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray


def pca_fit(vectors: np.ndarray, m: int) -> PcaModel:
    """Top-m principal directions via mean-centered SVD.

    Sign convention: each component row's largest-magnitude entry is positive.
    If m exceeds the numerical rank, trailing components carry variance 0.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must be (N, d)")
    n, d = x.shape
    if n < 2:
        raise ValueError("need at least two vectors")
    if not 1 <= m <= min(n, d):
        raise ValueError(f"m must be in [1, {min(n, d)}], got {m}")
    mean = x.mean(axis=0)
    _, svals, vt = np.linalg.svd(x - mean, full_matrices=False)
    components = vt[:m].copy()
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    variance = (svals[:m] ** 2) / n
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def pca_transform(model: PcaModel, vectors: np.ndarray) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    return (x - model.mean) @ model.components.T


@dataclass(frozen=True)
class SweepPoint:
    dim: int
    raw: IndexTriple
    dsi: float


def pca_sweep(cs: ClusteredSet, dims: Sequence[int]) -> list:
    """Project to each dimension, recompute the indices, normalize within the sweep.

    The dims list must include 2 and the full dimension so the sweep brackets
    the range of interest.
    """
    d = cs.vectors.shape[1]
    dims = sorted(set(int(v) for v in dims))
    if any(not 1 <= v <= d for v in dims):
        raise ValueError(f"dims must be within [1, {d}]")
    if 2 not in dims or d not in dims:
        raise ValueError(f"dims must include 2 and the full dimension {d}")
    model = pca_fit(cs.vectors, min(cs.n, d))
    triples = {}
    for dim in dims:
        projected = pca_transform(
            PcaModel(mean=model.mean, components=model.components[:dim],
                     explained_variance=model.explained_variance[:dim]),
            cs.vectors)
        reduced = ClusteredSet(vectors=projected, labels=cs.labels, label_names=cs.label_names)
        triples[("sweep", str(dim))] = index_triple(reduced)
    table = normalize_indices(triples)
    by_dim = {int(r.layer): r for r in table.rows}
    return [SweepPoint(dim=dim, raw=by_dim[dim].raw, dsi=by_dim[dim].dsi) for dim in dims]


# --- repetition averaging (random re-initialization protocol) ---

@dataclass(frozen=True)
class RepeatCell:
    network: str
    layer: str
    dsi_mean: float
    dsi_std: float


def dsi_repeat_mean(tables: Sequence[DsiTable]) -> list:
    """Cell-wise mean and population std of dsi across repeated tables."""
    if not tables:
        raise ValueError("need at least one table")
    keysets = [tuple((r.network, r.layer) for r in t.rows) for t in tables]
    base = set(keysets[0])
    for i, ks in enumerate(keysets[1:], start=2):
        if set(ks) != base:
            raise KeyMismatch(f"table {i} keys differ from table 1")
    cells = []
    for network, layer in keysets[0]:
        values = np.array([t.row(network, layer).dsi for t in tables], dtype=np.float64)
        cells.append(RepeatCell(network=network, layer=layer,
                                dsi_mean=float(values.mean()),
                                dsi_std=float(values.std())))
    return cells
