"""Training objectives.

Base phase: softmax cross-entropy on the classifier head, optionally joined
by a rotation-prediction cross-entropy on the same features (unit weights).

Incremental sessions combine three terms on the session batch only:
  * triplet hinge over all valid (anchor, positive, negative) index triples,
  * raw cosine similarity between the would-be prototypes of the new classes
    and every stored old prototype, summed over pairs (driving similarity
    down, not its absolute value),
  * an L1 drift penalty anchoring the session-trainable parameters to their
    values at selection time, weighted by ``lam``.

total = triplet + cosine + lam * drift, exactly linear in lam.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import engine
from .engine import Node
from .errors import ShapeError
from .masking import SessionMask
from .model import BoundParams, Snapshot

Array = np.ndarray

TRIPLET_REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class LossWeights:
    """Knobs of the session objective."""
    lam: float = 5.0
    triplet_margin: float = 0.0
    triplet_reduction: str = "mean"
    cosine_enabled: bool = True

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.triplet_margin < 0.0:
            raise ValueError("triplet margin must be >= 0")
        if self.triplet_reduction not in TRIPLET_REDUCTIONS:
            raise ValueError(f"triplet_reduction must be one of {TRIPLET_REDUCTIONS}")


@dataclass(frozen=True)
class TripletBatch:
    """Index triples into one session batch."""
    anchors: Array
    positives: Array
    negatives: Array

    def __post_init__(self):
        for name in ("anchors", "positives", "negatives"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, arr)
        if not (self.anchors.shape == self.positives.shape == self.negatives.shape):
            raise ShapeError("triplet index arrays must have equal length")
        if self.anchors.ndim != 1:
            raise ShapeError("triplet index arrays must be 1-d")

    def __len__(self) -> int:
        return self.anchors.size

    def validate(self, labels) -> None:
        """Anchor and positive must share a label, negative must differ."""
        labels = np.asarray(labels)
        n = labels.shape[0]
        for arr in (self.anchors, self.positives, self.negatives):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise IndexError(f"triplet index out of range for batch of {n}")
        if np.any(labels[self.anchors] != labels[self.positives]):
            raise ValueError("anchor and positive labels differ in some triple")
        if np.any(labels[self.anchors] == labels[self.negatives]):
            raise ValueError("anchor and negative share a label in some triple")

    @staticmethod
    def all_triples(labels) -> "TripletBatch":
        """Every (a, p, n) with label(a) == label(p), a != p as samples, and
        label(n) != label(a). Deterministic lexicographic order."""
        labels = np.asarray(labels)
        n = labels.shape[0]
        anchors, positives, negatives = [], [], []
        for a in range(n):
            for p in range(n):
                if p == a or labels[p] != labels[a]:
                    continue
                for m in range(n):
                    if labels[m] == labels[a]:
                        continue
                    anchors.append(a)
                    positives.append(p)
                    negatives.append(m)
        return TripletBatch(np.array(anchors, dtype=np.int64),
                            np.array(positives, dtype=np.int64),
                            np.array(negatives, dtype=np.int64))


# ---------------------------------------------------------------------------
# base objectives

def base_loss(bound: BoundParams, batch, labels) -> Node:
    """Classifier cross-entropy on a batch of raw inputs."""
    features = bound.features(batch)
    return engine.softmax_cross_entropy(bound.class_logits(features), labels)


def base_loss_with_ss(bound: BoundParams, batch, labels,
                      rotated_batch, rotation_labels) -> Node:
    """Classifier cross-entropy plus rotation-prediction cross-entropy, both
    with unit weight. The rotated batch goes through the extractor too but
    only feeds the rotation head."""
    rotation_labels = np.asarray(rotation_labels)
    if rotation_labels.size and (rotation_labels.min() < 0 or rotation_labels.max() > 3):
        raise ValueError("rotation labels must be quarter-turn counts in {0,1,2,3}")
    cls_term = base_loss(bound, batch, labels)
    rot_features = bound.features(rotated_batch)
    rot_term = engine.softmax_cross_entropy(bound.rotation_logits(rot_features),
                                            rotation_labels)
    return engine.add(cls_term, rot_term)


# ---------------------------------------------------------------------------
# session objectives

def triplet_loss(anchor, positive, negative, margin: float = 0.0) -> Node:
    """Hinge on the distance gap of one triple of feature vectors. Accepts
    plain arrays (recorded on a throwaway tape) or nodes."""
    return engine.triplet(anchor, positive, negative, margin)


def l1_regularization(bound: BoundParams, snapshot: Snapshot) -> Node:
    """Sum of |current - snapshot| over exactly the snapshot's addresses."""
    terms = []
    for key, (offsets, values) in snapshot.groups():
        node = bound.node(key)  # raises if the snapshot names a missing array
        if offsets.size and offsets.max() >= node.value.size:
            raise ValueError(f"snapshot offset outside parameter {key}")
        terms.append(engine.l1_anchor(engine.gather(node, offsets), values))
    if not terms:
        return bound.tape.leaf(0.0)
    return engine.add_n(terms)


def prototype_cosine_loss(new_prototypes: Sequence, old_prototypes: Sequence[Array]) -> Node:
    """Sum of raw cosine similarities over every (new, old) prototype pair.
    Empty old set contributes 0 by convention."""
    new_nodes = [p for p in new_prototypes if isinstance(p, Node)]
    tape = new_nodes[0].tape if new_nodes else engine.GradTape()
    if len(new_prototypes) == 0 or len(old_prototypes) == 0:
        return tape.leaf(0.0)
    terms = []
    for new in new_prototypes:
        for old in old_prototypes:
            terms.append(engine.cosine(engine._lift(tape, new), np.asarray(old)))
    return engine.add_n(terms)


@dataclass
class SessionLossTerms:
    """Total (recorded) plus the component values for trace logging."""
    total: Node
    triplet: float
    cosine: float
    drift: float

    def __float__(self) -> float:
        return float(self.total)


def session_loss(bound: BoundParams, batch, labels, triplets: TripletBatch,
                 mask: SessionMask, old_prototypes: Sequence[Array],
                 weights: LossWeights) -> SessionLossTerms:
    """Full incremental-session objective on one session batch.

    New-class prototypes are recomputed from the current extractor inside
    the recorded graph, so their cosine term pushes gradients into the
    session-trainable parameters.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("session batch is empty")
    triplets.validate(labels)
    features = bound.features(batch)

    rows: dict[int, Node] = {}

    def feat_row(i: int) -> Node:
        if i not in rows:
            rows[i] = engine.row(features, i)
        return rows[i]

    triple_nodes = [engine.triplet(feat_row(a), feat_row(p), feat_row(m),
                                   weights.triplet_margin)
                    for a, p, m in zip(triplets.anchors, triplets.positives,
                                       triplets.negatives)]
    if triple_nodes:
        tl = engine.add_n(triple_nodes)
        if weights.triplet_reduction == "mean":
            tl = engine.scale(tl, 1.0 / len(triple_nodes))
    else:
        tl = bound.tape.leaf(0.0)

    total = tl
    cosine_value = 0.0
    if weights.cosine_enabled and len(old_prototypes) > 0:
        new_protos = [engine.mean_rows(features, np.flatnonzero(labels == lab))
                      for lab in np.unique(labels)]
        cl = prototype_cosine_loss(new_protos, old_prototypes)
        cosine_value = float(cl.value)
        total = engine.add(total, cl)

    rl = l1_regularization(bound, mask.snapshot)
    total = engine.add(total, engine.scale(rl, weights.lam))

    return SessionLossTerms(total=total, triplet=float(tl.value),
                            cosine=cosine_value, drift=float(rl.value))
