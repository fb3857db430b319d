"""Class prototypes and the nearest-prototype decision rule.

A prototype is the plain mean of a class's feature vectors. The registry
only ever grows: sessions append new classes and never recompute what an
earlier session stored. Classification is the euclidean argmin over all
registered prototypes with ties broken toward the smallest label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError
from .model import ParameterStore, extract_features

Array = np.ndarray


@dataclass(frozen=True)
class PrototypeEntry:
    label: int
    vector: Array
    session: int
    count: int


class PrototypeRegistry:
    def __init__(self):
        self._entries: dict[int, PrototypeEntry] = {}
        self._matrix: Array | None = None  # cache, rows sorted by label
        self._sorted_labels: Array | None = None

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, label: int) -> bool:
        return int(label) in self._entries

    def labels(self) -> list[int]:
        return sorted(self._entries)

    def entries(self) -> list[PrototypeEntry]:
        return [self._entries[lab] for lab in sorted(self._entries)]

    def entry(self, label: int) -> PrototypeEntry:
        return self._entries[int(label)]

    def vectors(self) -> list[Array]:
        """Prototype vectors in ascending label order."""
        return [self._entries[lab].vector for lab in sorted(self._entries)]

    def register(self, prototypes: dict[int, Array], session: int,
                 counts: dict[int, int]) -> None:
        """Append one session's prototypes. A label seen before is a
        schedule violation, not an update."""
        for label in prototypes:
            if int(label) in self._entries:
                raise ProtocolError(f"label {label} already has a prototype; "
                                    "sessions must introduce disjoint classes")
        for label, vec in prototypes.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.ndim != 1:
                raise ValueError("prototype vectors must be 1-d")
            self._entries[int(label)] = PrototypeEntry(
                label=int(label), vector=vec.copy(), session=int(session),
                count=int(counts[label]))
        self._matrix = None
        self._sorted_labels = None

    def _stacked(self) -> tuple[Array, Array]:
        if self._matrix is None:
            labs = np.array(sorted(self._entries), dtype=np.int64)
            self._matrix = np.stack([self._entries[int(l)].vector for l in labs])
            self._sorted_labels = labs
        return self._sorted_labels, self._matrix

    def classify(self, feature) -> int:
        """Nearest prototype by euclidean distance; ties go to the smaller
        label (prototype rows are stacked in ascending label order and
        argmin returns the first minimum)."""
        if not self._entries:
            raise ProtocolError("cannot classify with an empty prototype registry")
        feature = np.asarray(feature, dtype=np.float64)
        labels, matrix = self._stacked()
        if feature.shape != (matrix.shape[1],):
            raise ValueError(f"feature shape {feature.shape} does not match "
                             f"prototype dimension {matrix.shape[1]}")
        d = _distance_rows(feature[None, :], matrix)[0]
        return int(labels[int(np.argmin(d))])

    def classify_batch(self, features) -> Array:
        if not self._entries:
            raise ProtocolError("cannot classify with an empty prototype registry")
        features = np.asarray(features, dtype=np.float64)
        labels, matrix = self._stacked()
        d = _distance_rows(features, matrix)
        return labels[np.argmin(d, axis=1)]

    def to_dict(self) -> dict:
        return {"classes": [{
            "label": e.label,
            "session": e.session,
            "count": e.count,
            "prototype": e.vector.tolist(),
        } for e in self.entries()]}


def _distance_rows(features: Array, matrix: Array) -> Array:
    """Pairwise euclidean distances, (n, d) x (p, d) -> (n, p). classify and
    classify_batch share this path so single and batched decisions agree
    bit-for-bit."""
    diff = features[:, None, :] - matrix[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def compute_prototypes(store: ParameterStore, batch, labels) -> dict[int, Array]:
    """Per-class feature means of a labelled batch."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("cannot compute prototypes of an empty batch")
    features = extract_features(store, batch)
    out: dict[int, Array] = {}
    for lab in np.unique(labels):
        out[int(lab)] = features[labels == lab].mean(axis=0)
    return out


def class_counts(labels) -> dict[int, int]:
    labels = np.asarray(labels)
    return {int(lab): int((labels == lab).sum()) for lab in np.unique(labels)}


def evaluate_accuracy(store: ParameterStore, registry: PrototypeRegistry,
                      batch, labels) -> float:
    """Fraction of samples whose nearest prototype carries their label.
    Every test label must already be registered."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("cannot evaluate on an empty test set")
    unseen = sorted(set(int(l) for l in np.unique(labels)) - set(registry.labels()))
    if unseen:
        raise ProtocolError(f"test labels {unseen} were never registered")
    features = extract_features(store, batch)
    predicted = registry.classify_batch(features)
    return float((predicted == labels).mean())


def mean_pairwise_cosine(new_vectors, old_vectors) -> float:
    """Mean raw cosine similarity over all (new, old) pairs; nan when either
    side is empty."""
    from .engine import cosine_similarity
    pairs = [(n, o) for n in new_vectors for o in old_vectors]
    if not pairs:
        return float("nan")
    return float(np.mean([cosine_similarity(n, o) for n, o in pairs]))


def write_registry(registry: PrototypeRegistry, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(registry.to_dict(), fh)
        fh.write("\n")
