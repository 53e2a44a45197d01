"""k-NN recognition of distortion type and of joint type+severity.

Brute-force Euclidean k-NN with fully deterministic tie handling: equal
distances rank by training insertion order, and vote ties go to the tied
class whose nearest member sits closest. Accuracy and confusion counts are
averaged across reference-level train/test splits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from deepsep.data import Manifest, ManifestRow
from deepsep.errors import DegenerateSplit, EmptyTrainSet, MissingVector
from deepsep.features import PooledSet
from deepsep.quality import SplitPlan, make_splits

TASK_TYPE = "type"
TASK_TYPE_SEVERITY = "type-severity"
TASKS = (TASK_TYPE, TASK_TYPE_SEVERITY)


def task_label(row: ManifestRow, task: str) -> str:
    """Class label of a manifest row: ordered kinds, optionally with levels."""
    if task == TASK_TYPE:
        return row.kind_label
    if task == TASK_TYPE_SEVERITY:
        return f"{row.kind_label}@{row.level_label}"
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


def knn_predict(train_vectors: np.ndarray, train_labels: Sequence[str],
                query: np.ndarray, k: int) -> str:
    """Majority vote among the k nearest training vectors (Euclidean)."""
    preds = knn_predict_batch(train_vectors, train_labels,
                              np.asarray(query, dtype=np.float64)[None, :], k)
    return preds[0]


def knn_predict_batch(train_vectors: np.ndarray, train_labels: Sequence[str],
                      queries: np.ndarray, k: int) -> list:
    train_vectors = np.asarray(train_vectors, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    n_train = train_vectors.shape[0]
    if n_train == 0:
        raise EmptyTrainSet("no training vectors")
    if not 1 <= k <= n_train:
        raise ValueError(f"k must be in [1, {n_train}], got {k}")
    labels = list(train_labels)
    if len(labels) != n_train:
        raise ValueError("train labels and vectors differ in length")

    # squared distances suffice for ranking and avoid needless sqrt
    d2 = (
        (queries ** 2).sum(axis=1, keepdims=True)
        - 2.0 * queries @ train_vectors.T
        + (train_vectors ** 2).sum(axis=1)
    )
    predictions = []
    for row in d2:
        # stable sort: equal distances rank by training insertion order
        neighbor_idx = np.argsort(row, kind="stable")[:k]
        votes = {}
        for pos, idx in enumerate(neighbor_idx):
            label = labels[idx]
            if label not in votes:
                votes[label] = [0, pos]  # count, position of nearest member
            votes[label][0] += 1
        top = max(count for count, _ in votes.values())
        # among tied classes, the one whose nearest member is closest wins
        winner = min(
            (nearest_pos, label)
            for label, (count, nearest_pos) in votes.items() if count == top
        )[1]
        predictions.append(winner)
    return predictions


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square matrix over a fixed class order; rows are truth, columns predictions."""

    classes: tuple
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.float64)
        if c.shape != (len(self.classes), len(self.classes)):
            raise ValueError("counts must be square over the class set")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    def row_normalized(self) -> np.ndarray:
        out = self.counts.copy()
        sums = out.sum(axis=1, keepdims=True)
        nonzero = sums[:, 0] > 0
        out[nonzero] = out[nonzero] / sums[nonzero]
        return out

    def save_csv(self, path: str | Path, normalized: bool = False,
                 provenance: Optional[str] = None) -> None:
        grid = self.row_normalized() if normalized else self.counts
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            if provenance:
                fh.write(f"# {provenance}\n")
            w = csv.writer(fh)
            w.writerow(["true\\pred", *self.classes])
            for name, row in zip(self.classes, grid):
                w.writerow([name, *[repr(float(v)) for v in row]])
        tmp.replace(path)


@dataclass(frozen=True)
class RecognitionResult:
    database: str
    network: str
    layer: str
    task: str
    k: int
    per_split_accuracy: tuple
    mean_confusion: ConfusionMatrix

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.per_split_accuracy))


def evaluate_recognition(pooled: PooledSet, manifest: Manifest, task: str, k: int,
                         plan: SplitPlan) -> RecognitionResult:
    """Memorize train-side vectors, predict the test side, average over splits."""
    rows = [r for r in manifest.distorted]
    if not rows:
        raise ValueError("manifest has no distorted rows")
    for r in rows:
        if not pooled.has(r.image_id):
            raise MissingVector(f"image {r.image_id!r} has no vector in the dump")

    classes = tuple(sorted({task_label(r, task) for r in rows}))
    class_index = {c: i for i, c in enumerate(classes)}
    vectors = np.stack([pooled.vector(r.image_id) for r in rows]).astype(np.float64)
    labels = [task_label(r, task) for r in rows]
    ref_of = np.array([r.reference_id for r in rows])

    splits = make_splits(plan, sorted({r.reference_id for r in rows}))
    accuracies = []
    counts = np.zeros((len(classes), len(classes)), dtype=np.float64)
    for train, test in splits:
        train_mask = np.isin(ref_of, list(train))
        test_mask = np.isin(ref_of, list(test))
        if not test_mask.any() or not train_mask.any():
            raise DegenerateSplit("a split left train or test side empty")
        train_labels = [labels[i] for i in np.flatnonzero(train_mask)]
        test_labels = [labels[i] for i in np.flatnonzero(test_mask)]
        preds = knn_predict_batch(vectors[train_mask], train_labels, vectors[test_mask], k)
        hits = sum(p == t for p, t in zip(preds, test_labels))
        accuracies.append(hits / len(test_labels))
        for p, t in zip(preds, test_labels):
            counts[class_index[t], class_index[p]] += 1.0

    mean_counts = counts / len(splits)
    return RecognitionResult(
        database=rows[0].database, network=pooled.network, layer=pooled.layer,
        task=task, k=k, per_split_accuracy=tuple(accuracies),
        mean_confusion=ConfusionMatrix(classes=classes, counts=mean_counts))


def write_accuracy_csv(path: str | Path, results: Sequence[RecognitionResult],
                       provenance: Optional[str] = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        w = csv.writer(fh)
        w.writerow(["database", "network", "layer", "task", "k", "mean_accuracy"])
        for r in results:
            w.writerow([r.database, r.network, r.layer, r.task, r.k, repr(r.mean_accuracy)])
    tmp.replace(path)
