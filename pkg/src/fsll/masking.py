"""Magnitude-based split of extractor parameters into session-trainable and
kept-frozen sets.

Selection is per extractor layer: weights and bias of a layer form one pool
ordered by |value|, and the lowest round(fraction * pool_size) entries become
trainable for the upcoming session. Ties on |value| are broken toward the
lower combined offset (weights in row-major order, then bias entries). The
heads never participate. A Snapshot of the trainable values at selection
time rides along as the anchor for the drift penalty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import (GROUP_EXTRACTOR, KIND_BIAS, KIND_WEIGHT, ParamAddress,
                    ParamKey, ParameterStore, Snapshot, snapshot_params)

Array = np.ndarray


def selected_count(fraction: float, pool_size: int) -> int:
    """round(fraction * pool_size), bumped to 1 when a positive fraction
    would otherwise select nothing, and clamped to the pool."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if pool_size < 0:
        raise ValueError("pool size must be >= 0")
    k = int(round(fraction * pool_size))
    if k == 0 and fraction > 0.0 and pool_size > 0:
        k = 1
    return min(k, pool_size)


@dataclass(frozen=True)
class LayerSelection:
    """Trainable/frozen flat offsets for one extractor layer."""
    layer: int
    threshold: float
    weight_trainable: Array
    bias_trainable: Array
    weight_frozen: Array
    bias_frozen: Array

    @property
    def n_trainable(self) -> int:
        return self.weight_trainable.size + self.bias_trainable.size

    @property
    def pool_size(self) -> int:
        return self.n_trainable + self.weight_frozen.size + self.bias_frozen.size


@dataclass(frozen=True)
class SessionMask:
    session: int
    fraction: float
    layers: list[LayerSelection]
    snapshot: Snapshot

    @property
    def n_trainable(self) -> int:
        return sum(sel.n_trainable for sel in self.layers)

    @property
    def n_frozen(self) -> int:
        return sum(sel.pool_size for sel in self.layers) - self.n_trainable

    def trainable_addresses(self) -> list[ParamAddress]:
        out = []
        for sel in self.layers:
            out.extend(ParamAddress(GROUP_EXTRACTOR, sel.layer, KIND_WEIGHT, int(o))
                       for o in sel.weight_trainable)
            out.extend(ParamAddress(GROUP_EXTRACTOR, sel.layer, KIND_BIAS, int(o))
                       for o in sel.bias_trainable)
        return out

    def frozen_addresses(self) -> list[ParamAddress]:
        out = []
        for sel in self.layers:
            out.extend(ParamAddress(GROUP_EXTRACTOR, sel.layer, KIND_WEIGHT, int(o))
                       for o in sel.weight_frozen)
            out.extend(ParamAddress(GROUP_EXTRACTOR, sel.layer, KIND_BIAS, int(o))
                       for o in sel.bias_frozen)
        return out


def select_session_trainable(store: ParameterStore, fraction: float,
                             session: int = 2) -> SessionMask:
    """Pick the lowest-magnitude fraction of each extractor layer and
    snapshot the picked values."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    selections = []
    addresses: list[ParamAddress] = []
    for i, layer in enumerate(store.extractor):
        wsize = layer.weights.size
        magnitudes = np.concatenate([np.abs(layer.weights.reshape(-1)),
                                     np.abs(layer.bias)])
        k = selected_count(fraction, magnitudes.size)
        # stable sort on |value|: ties resolve toward the lower combined offset
        order = np.argsort(magnitudes, kind="stable")
        picked = np.sort(order[:k])
        threshold = float(magnitudes[order[k - 1]]) if k > 0 else 0.0
        mask = np.zeros(magnitudes.size, dtype=bool)
        mask[picked] = True
        rest = np.flatnonzero(~mask)
        sel = LayerSelection(
            layer=i,
            threshold=threshold,
            weight_trainable=picked[picked < wsize],
            bias_trainable=picked[picked >= wsize] - wsize,
            weight_frozen=rest[rest < wsize],
            bias_frozen=rest[rest >= wsize] - wsize,
        )
        selections.append(sel)
        addresses.extend(ParamAddress(GROUP_EXTRACTOR, i, KIND_WEIGHT, int(o))
                         for o in sel.weight_trainable)
        addresses.extend(ParamAddress(GROUP_EXTRACTOR, i, KIND_BIAS, int(o))
                         for o in sel.bias_trainable)
    return SessionMask(session=int(session), fraction=float(fraction),
                       layers=selections, snapshot=snapshot_params(store, addresses))


def reselect_for_next_session(store: ParameterStore, fraction: float,
                              previous: SessionMask) -> SessionMask:
    """Fresh magnitude selection against the current parameter values; the
    previous mask only supplies the session counter."""
    return select_session_trainable(store, fraction, session=previous.session + 1)


def apply_masked_update(store: ParameterStore, mask: SessionMask,
                        gradients: dict[ParamKey, Array], lr: float) -> None:
    """w <- w - lr * g, strictly on the trainable addresses. Frozen entries
    are never written, so they stay bit-identical. Gradient arrays for
    untouched parameter groups may be absent (treated as zero)."""
    if lr <= 0.0:
        raise ValueError("learning rate must be positive")
    for key, g in gradients.items():
        arr = store.array(key)  # raises on unknown keys
        if np.asarray(g).shape != arr.shape:
            raise ValueError(f"gradient shape {np.asarray(g).shape} does not match "
                             f"parameter {key} of shape {arr.shape}")
    for sel in mask.layers:
        for kind, idx in ((KIND_WEIGHT, sel.weight_trainable),
                          (KIND_BIAS, sel.bias_trainable)):
            if idx.size == 0:
                continue
            key = (GROUP_EXTRACTOR, sel.layer, kind)
            g = gradients.get(key)
            if g is None:
                continue
            flat = store.array(key).reshape(-1)
            flat[idx] -= lr * np.asarray(g, dtype=np.float64).reshape(-1)[idx]


def mask_to_dict(mask: SessionMask) -> dict:
    """Diagnostic dump: thresholds, counts, and explicit address lists."""
    layers = []
    for sel in mask.layers:
        layers.append({
            "layer": sel.layer,
            "threshold": sel.threshold,
            "pool_size": sel.pool_size,
            "n_trainable": sel.n_trainable,
            "trainable": {
                KIND_WEIGHT: [int(o) for o in sel.weight_trainable],
                KIND_BIAS: [int(o) for o in sel.bias_trainable],
            },
        })
    return {
        "session": mask.session,
        "fraction": mask.fraction,
        "n_trainable": mask.n_trainable,
        "n_frozen": mask.n_frozen,
        "layers": layers,
    }


def write_mask(mask: SessionMask, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mask_to_dict(mask), fh, indent=2)
        fh.write("\n")
