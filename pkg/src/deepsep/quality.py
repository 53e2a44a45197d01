"""Reduced-reference IQA: feature distance to the reference vs human scores.

The method is training-free; an image's predicted quality degrades with the
Euclidean distance between its pooled feature vector and its reference's.
Train/test splits over reference ids exist only to replicate the standard
IQA reporting protocol: correlations are computed on the test side of each
split and summarized as the median and mean over splits.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from deepsep.data import Manifest, Polarity
from deepsep.errors import ConstantInput, DegenerateSplit, MissingVector, TapMismatch
from deepsep.features import PooledSet, PooledVector


def rr_distance(distorted: PooledVector, reference: PooledVector) -> float:
    """Euclidean distance between a distorted image's vector and its reference's."""
    if distorted.tap != reference.tap:
        raise TapMismatch(f"distance across taps {distorted.tap} vs {reference.tap}")
    return float(np.linalg.norm(
        distorted.values.astype(np.float64) - reference.values.astype(np.float64)))


def average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of their rank range."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def plcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson linear correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-D and equal length")
    if len(x) < 3:
        raise ValueError("need at least three points")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInput("correlation of a constant series is undefined")
    return float((xc * yc).sum() / (sx * sy))


def srocc(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank-order correlation: Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-D and equal length")
    if len(x) < 3:
        raise ValueError("need at least three points")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantInput("correlation of a constant series is undefined")
    return plcc(average_ranks(x), average_ranks(y))


@dataclass(frozen=True)
class SplitPlan:
    """Reference-level train/test split protocol; all distorted images follow their reference."""

    split_count: int = 100
    train_fraction: float = 0.8
    master_seed: int = 0

    def __post_init__(self):
        if self.split_count < 1:
            raise ValueError("split_count must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def make_splits(plan: SplitPlan, reference_ids: Sequence[str]) -> list:
    """Deterministic splits over sorted reference ids; independent of input order.

    Returns a list of (train_ids, test_ids) frozensets partitioning the
    references; split i is a pure function of (master_seed, i, id set).
    """
    ids = sorted(set(reference_ids))
    if len(ids) < 2:
        raise DegenerateSplit("need at least two reference ids to split")
    n_train = int(round(plan.train_fraction * len(ids)))
    n_train = min(max(n_train, 1), len(ids) - 1)
    splits = []
    for i in range(plan.split_count):
        rng = np.random.default_rng([plan.master_seed, i])
        order = rng.permutation(len(ids))
        train = frozenset(ids[j] for j in order[:n_train])
        test = frozenset(ids[j] for j in order[n_train:])
        splits.append((train, test))
    return splits


@dataclass(frozen=True)
class CorrelationReport:
    database: str
    network: str
    layer: str
    dist_kind: Optional[str]
    srocc_values: tuple
    plcc_values: tuple

    @property
    def median_srocc(self) -> float:
        return float(np.median(self.srocc_values))

    @property
    def mean_srocc(self) -> float:
        return float(np.mean(self.srocc_values))

    @property
    def median_plcc(self) -> float:
        return float(np.median(self.plcc_values))

    @property
    def mean_plcc(self) -> float:
        return float(np.mean(self.plcc_values))

    def save_csv(self, path: str | Path, provenance: Optional[str] = None) -> None:
        write_correlation_csv(path, [self], provenance)

    def to_json_dict(self) -> dict:
        return {
            "database": self.database, "network": self.network, "layer": self.layer,
            "dist_kind": self.dist_kind,
            "median_srocc": self.median_srocc, "mean_srocc": self.mean_srocc,
            "median_plcc": self.median_plcc, "mean_plcc": self.mean_plcc,
            "splits": len(self.srocc_values),
        }


def write_correlation_csv(path: str | Path, reports: Sequence[CorrelationReport],
                          provenance: Optional[str] = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        w = csv.writer(fh)
        w.writerow(["database", "network", "layer", "dist_kind", "stat", "srocc", "plcc"])
        for r in reports:
            kind = r.dist_kind or ""
            w.writerow([r.database, r.network, r.layer, kind, "median",
                        repr(r.median_srocc), repr(r.median_plcc)])
            w.writerow([r.database, r.network, r.layer, kind, "mean",
                        repr(r.mean_srocc), repr(r.mean_plcc)])
    tmp.replace(path)


def write_correlation_json(path: str | Path, reports: Sequence[CorrelationReport],
                           provenance: Optional[dict] = None) -> None:
    payload = {"reports": [r.to_json_dict() for r in reports]}
    if provenance:
        payload["provenance"] = provenance
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n")
    tmp.replace(path)


def evaluate_rriqa(pooled: PooledSet, manifest: Manifest, plan: SplitPlan,
                   kind: Optional[str] = None) -> CorrelationReport:
    """Correlate reference-distance with ground truth on the test side of each split.

    Scores are sign-aligned so that a positive correlation always means the
    method works: predicted quality is the negated distance, and higher-is-worse
    ground truth is negated too. An optional kind restricts evaluation to rows
    of a single distortion type.
    """
    rows = [r for r in manifest.distorted if r.score is not None]
    if kind is not None:
        rows = [r for r in rows if r.kind_label == kind]
    if not rows:
        raise ValueError(f"no scored distorted rows{f' of kind {kind!r}' if kind else ''}")
    for r in rows:
        if not pooled.has(r.image_id):
            raise MissingVector(f"image {r.image_id!r} has no vector in the dump")
        if not pooled.has(r.reference_id):
            raise MissingVector(f"reference {r.reference_id!r} has no vector in the dump")

    ids = [r.image_id for r in rows]
    refs = [r.reference_id for r in rows]
    vec = np.stack([pooled.vector(i) for i in ids]).astype(np.float64)
    ref = np.stack([pooled.vector(i) for i in refs]).astype(np.float64)
    distances = np.linalg.norm(vec - ref, axis=1)
    dist_of = dict(zip(ids, distances))

    ref_ids = sorted({r.reference_id for r in rows})
    splits = make_splits(plan, ref_ids)

    srocc_vals = []
    plcc_vals = []
    for train, test in splits:
        if len(test) < 3:
            raise DegenerateSplit(
                f"test side has {len(test)} references; at least 3 required")
        test_rows = [r for r in rows if r.reference_id in test]
        predicted = np.array([-dist_of[r.image_id] for r in test_rows])
        truth = np.array([
            r.score if r.polarity is Polarity.HIGHER_IS_BETTER else -r.score
            for r in test_rows
        ])
        srocc_vals.append(srocc(predicted, truth))
        plcc_vals.append(plcc(predicted, truth))

    database = rows[0].database
    return CorrelationReport(
        database=database, network=pooled.network, layer=pooled.layer,
        dist_kind=kind, srocc_values=tuple(srocc_vals), plcc_values=tuple(plcc_vals))
