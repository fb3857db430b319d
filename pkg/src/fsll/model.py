"""Dense feature extractor with detachable heads, and flat parameter access.

Parameters are addressed two ways:
  * ParamKey (group, layer, kind) names one whole array, e.g.
    ("extractor", 0, "weight");
  * ParamAddress adds a flat row-major offset to name a single scalar.

The base classifier head exists only during base training and is discarded
afterwards; the rotation head is always allocated so that initialisation is
a pure function of (config, seed) regardless of which method runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import engine
from .engine import GradTape, Node
from .errors import ProtocolError, ShapeError

Array = np.ndarray

GROUP_EXTRACTOR = "extractor"
GROUP_CLASSIFIER = "classifier"
GROUP_ROTATION = "rotation"
KIND_WEIGHT = "weight"
KIND_BIAS = "bias"

# (group, layer index within group, kind)
ParamKey = tuple[str, int, str]

ROTATION_CLASSES = 4


@dataclass(frozen=True, order=True)
class ParamAddress:
    """One scalar parameter: array key plus flat row-major offset."""
    group: str
    layer: int
    kind: str
    offset: int

    @property
    def key(self) -> ParamKey:
        return (self.group, self.layer, self.kind)

    def dotted(self) -> str:
        return f"{self.group}.{self.layer}.{self.kind}[{self.offset}]"


@dataclass(frozen=True)
class Arch:
    """Extractor shape, independent of corpus and head widths."""
    hidden_dims: tuple[int, ...] = (64,)
    feature_dim: int = 32


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    hidden_dims: tuple[int, ...] = (64,)
    feature_dim: int = 32
    base_classes: int = 12
    rotation_classes: int = ROTATION_CLASSES

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.feature_dim, self.base_classes)
        if any(int(d) < 1 for d in dims):
            raise ValueError(f"all layer widths must be >= 1, got {dims}")
        if self.rotation_classes != ROTATION_CLASSES:
            raise ValueError("the rotation head predicts exactly 4 quarter-turns")

    @property
    def extractor_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.feature_dim)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "feature_dim": self.feature_dim,
            "base_classes": self.base_classes,
            "rotation_classes": self.rotation_classes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(input_dim=int(d["input_dim"]),
                   hidden_dims=tuple(int(h) for h in d["hidden_dims"]),
                   feature_dim=int(d["feature_dim"]),
                   base_classes=int(d["base_classes"]),
                   rotation_classes=int(d.get("rotation_classes", ROTATION_CLASSES)))


class DenseLayer:
    __slots__ = ("weights", "bias")

    def __init__(self, weights: Array, bias: Array):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("dense layer needs 2-d weights and 1-d bias")
        if self.weights.shape[1] != self.bias.shape[0]:
            raise ShapeError(f"bias width {self.bias.shape[0]} does not match "
                             f"weights {self.weights.shape}")

    @property
    def size(self) -> int:
        return self.weights.size + self.bias.size


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> Array:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class ParameterStore:
    """All model parameters, mutated in place by the training loops."""

    def __init__(self, config: ModelConfig, extractor: list[DenseLayer],
                 classifier: DenseLayer | None, rotation: DenseLayer, seed: int):
        self.config = config
        self.extractor = extractor
        self.classifier = classifier
        self.rotation = rotation
        self.seed = int(seed)

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "ParameterStore":
        """Glorot-uniform weights, zero biases; a pure function of
        (config, seed)."""
        rng = np.random.default_rng(int(seed))
        dims = config.extractor_dims
        extractor = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            extractor.append(DenseLayer(_glorot(rng, fan_in, fan_out), np.zeros(fan_out)))
        classifier = DenseLayer(_glorot(rng, config.feature_dim, config.base_classes),
                                np.zeros(config.base_classes))
        rotation = DenseLayer(_glorot(rng, config.feature_dim, config.rotation_classes),
                              np.zeros(config.rotation_classes))
        return cls(config, extractor, classifier, rotation, seed)

    # -- flat access -------------------------------------------------------

    def _layer(self, group: str, index: int) -> DenseLayer:
        if group == GROUP_EXTRACTOR:
            if 0 <= index < len(self.extractor):
                return self.extractor[index]
        elif group == GROUP_CLASSIFIER and index == 0:
            if self.classifier is None:
                raise ProtocolError("classifier head has been discarded")
            return self.classifier
        elif group == GROUP_ROTATION and index == 0:
            return self.rotation
        raise ValueError(f"no parameter group {group}.{index}")

    def array(self, key: ParamKey) -> Array:
        group, index, kind = key
        layer = self._layer(group, index)
        if kind == KIND_WEIGHT:
            return layer.weights
        if kind == KIND_BIAS:
            return layer.bias
        raise ValueError(f"unknown parameter kind {kind!r}")

    def param_items(self) -> list[tuple[ParamKey, Array]]:
        """Every parameter array present, in a fixed deterministic order."""
        items: list[tuple[ParamKey, Array]] = []
        for i, layer in enumerate(self.extractor):
            items.append(((GROUP_EXTRACTOR, i, KIND_WEIGHT), layer.weights))
            items.append(((GROUP_EXTRACTOR, i, KIND_BIAS), layer.bias))
        if self.classifier is not None:
            items.append(((GROUP_CLASSIFIER, 0, KIND_WEIGHT), self.classifier.weights))
            items.append(((GROUP_CLASSIFIER, 0, KIND_BIAS), self.classifier.bias))
        items.append(((GROUP_ROTATION, 0, KIND_WEIGHT), self.rotation.weights))
        items.append(((GROUP_ROTATION, 0, KIND_BIAS), self.rotation.bias))
        return items

    def value_at(self, address: ParamAddress) -> float:
        arr = self.array(address.key)
        if not 0 <= address.offset < arr.size:
            raise ValueError(f"invalid parameter address {address.dotted()}")
        return float(arr.reshape(-1)[address.offset])

    @property
    def extractor_param_count(self) -> int:
        return sum(layer.size for layer in self.extractor)


def discard_classifier(store: ParameterStore) -> None:
    """Drop the base classifier head for good. Raises if already discarded."""
    if store.classifier is None:
        raise ProtocolError("classifier head was already discarded")
    store.classifier = None


# ---------------------------------------------------------------------------
# forward paths

class BoundParams:
    """Leaf nodes for every parameter array of a store, on one tape.

    Rebuild after any in-place parameter update; leaves alias the live
    arrays and a stale tape would mix old and new values.
    """

    def __init__(self, store: ParameterStore, tape: GradTape):
        self.store = store
        self.tape = tape
        self.nodes: dict[ParamKey, Node] = {
            key: tape.leaf(arr) for key, arr in store.param_items()
        }

    def node(self, key: ParamKey) -> Node:
        try:
            return self.nodes[key]
        except KeyError:
            raise ValueError(f"parameter {key} is not bound") from None

    def features(self, batch) -> Node:
        """Extractor forward pass: dense layers with relu between them and
        a linear final layer."""
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.store.config.input_dim:
            raise ShapeError(f"batch shape {x.shape} does not match input_dim "
                             f"{self.store.config.input_dim}")
        h: Node | Array = x
        last = len(self.store.extractor) - 1
        for i in range(len(self.store.extractor)):
            h = engine.dense_forward(h, self.node((GROUP_EXTRACTOR, i, KIND_WEIGHT)),
                                     self.node((GROUP_EXTRACTOR, i, KIND_BIAS)))
            if i < last:
                h = engine.relu(h)
        return h

    def class_logits(self, features: Node | Array) -> Node:
        if self.store.classifier is None:
            raise ProtocolError("classifier head has been discarded")
        return engine.dense_forward(features, self.node((GROUP_CLASSIFIER, 0, KIND_WEIGHT)),
                                    self.node((GROUP_CLASSIFIER, 0, KIND_BIAS)))

    def rotation_logits(self, features: Node | Array) -> Node:
        return engine.dense_forward(features, self.node((GROUP_ROTATION, 0, KIND_WEIGHT)),
                                    self.node((GROUP_ROTATION, 0, KIND_BIAS)))

    def gradient_map(self) -> dict[ParamKey, Array]:
        """Per-array gradients after backward(); arrays the loss never
        touched come back as zeros."""
        return {key: engine.grad_of(node) for key, node in self.nodes.items()}


def extract_features(store: ParameterStore, batch) -> Array:
    """Inference-only feature extraction."""
    return BoundParams(store, GradTape()).features(batch).value


def classify_logits(store: ParameterStore, features) -> Array:
    f = np.asarray(features, dtype=np.float64)
    return BoundParams(store, GradTape()).class_logits(f).value


def rotation_logits(store: ParameterStore, features) -> Array:
    f = np.asarray(features, dtype=np.float64)
    return BoundParams(store, GradTape()).rotation_logits(f).value


# ---------------------------------------------------------------------------
# snapshots

class Snapshot:
    """Point-in-time copy of a set of scalar parameters, grouped by array."""

    def __init__(self, groups: dict[ParamKey, tuple[Array, Array]]):
        # key -> (sorted flat offsets int64, copied values float64)
        self._groups = {}
        for key, (offsets, values) in groups.items():
            off = np.asarray(offsets, dtype=np.int64)
            val = np.asarray(values, dtype=np.float64)
            if off.shape != val.shape or off.ndim != 1:
                raise ShapeError("snapshot offsets and values must be aligned 1-d arrays")
            self._groups[key] = (off.copy(), val.copy())

    def groups(self):
        return self._groups.items()

    def __len__(self) -> int:
        return sum(off.size for off, _ in self._groups.values())

    def addresses(self) -> list[ParamAddress]:
        out = []
        for (group, layer, kind), (off, _) in self._groups.items():
            out.extend(ParamAddress(group, layer, kind, int(o)) for o in off)
        return out

    def value_at(self, address: ParamAddress) -> float:
        try:
            off, val = self._groups[address.key]
        except KeyError:
            raise KeyError(f"snapshot does not cover {address.key}") from None
        pos = np.searchsorted(off, address.offset)
        if pos >= off.size or off[pos] != address.offset:
            raise KeyError(f"snapshot does not cover {address.dotted()}")
        return float(val[pos])


def snapshot_params(store: ParameterStore, addresses: Iterable[ParamAddress]) -> Snapshot:
    """Copy the named scalars out of the store. Later store mutations do not
    leak into the snapshot."""
    by_key: dict[ParamKey, list[int]] = {}
    for addr in addresses:
        arr = store.array(addr.key)
        if not 0 <= addr.offset < arr.size:
            raise ValueError(f"invalid parameter address {addr.dotted()}")
        by_key.setdefault(addr.key, []).append(addr.offset)
    groups = {}
    for key, offsets in by_key.items():
        off = np.sort(np.asarray(offsets, dtype=np.int64))
        if np.unique(off).size != off.size:
            raise ValueError(f"duplicate address in snapshot request for {key}")
        groups[key] = (off, store.array(key).reshape(-1)[off])
    return Snapshot(groups)


# ---------------------------------------------------------------------------
# checkpointing

CHECKPOINT_FORMAT = "fsll-checkpoint"
CHECKPOINT_VERSION = 1


def _layer_to_lists(layer: DenseLayer) -> dict:
    return {"weights": layer.weights.tolist(), "bias": layer.bias.tolist()}


def _layer_from_lists(d: dict) -> DenseLayer:
    return DenseLayer(np.array(d["weights"], dtype=np.float64),
                      np.array(d["bias"], dtype=np.float64))


def checkpoint_dict(store: ParameterStore) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": store.config.to_dict(),
        "seed": store.seed,
        "extractor": [_layer_to_lists(l) for l in store.extractor],
        "classifier": None if store.classifier is None else _layer_to_lists(store.classifier),
        "rotation": _layer_to_lists(store.rotation),
    }


def save_checkpoint(store: ParameterStore, path) -> None:
    """JSON checkpoint. float64 values survive the round trip bit-exactly
    because json serialises them via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_dict(store), fh)
        fh.write("\n")


def load_checkpoint(path) -> ParameterStore:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a model checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')}")
    config = ModelConfig.from_dict(d["config"])
    extractor = [_layer_from_lists(l) for l in d["extractor"]]
    classifier = None if d["classifier"] is None else _layer_from_lists(d["classifier"])
    rotation = _layer_from_lists(d["rotation"])
    dims = config.extractor_dims
    if len(extractor) != len(dims) - 1:
        raise ValueError("checkpoint layer count does not match its config")
    for layer, (fi, fo) in zip(extractor, zip(dims[:-1], dims[1:])):
        if layer.weights.shape != (fi, fo):
            raise ValueError("checkpoint layer shape does not match its config")
    return ParameterStore(config, extractor, classifier, rotation, int(d["seed"]))
