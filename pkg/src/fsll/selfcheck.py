"""Built-in verification battery behind the ``check`` subcommand: quick
gradient, selection, classification, checkpoint, and determinism probes.
The pytest suite is the thorough version; this is the thirty-second one.
"""

from __future__ import annotations

import numpy as np

from . import engine
from .engine import GradTape, finite_difference_check
from .losses import LossWeights, TripletBatch, base_loss, session_loss
from .masking import select_session_trainable, selected_count
from .model import BoundParams, ModelConfig, ParameterStore, load_checkpoint, \
    save_checkpoint
from .prototypes import PrototypeRegistry


def _tiny_store(seed: int) -> ParameterStore:
    cfg = ModelConfig(input_dim=4, hidden_dims=(5,), feature_dim=3, base_classes=3)
    return ParameterStore.initialize(cfg, seed)


def _check_gradients() -> str:
    worst = 0.0
    for trial in range(3):
        rng = np.random.default_rng(90 + trial)
        store = _tiny_store(trial)
        x = rng.normal(size=(6, 4))
        y = rng.integers(0, 3, size=6)
        params = [arr for _, arr in store.param_items()]

        def build_base():
            bound = BoundParams(store, GradTape())
            return base_loss(bound, x, y), [bound.nodes[k] for k, _ in store.param_items()]

        worst = max(worst, finite_difference_check(build_base, params, 1e-6))

        sx = rng.normal(size=(4, 4))
        sy = np.array([0, 0, 1, 1])
        mask = select_session_trainable(store, 0.3)
        triplets = TripletBatch.all_triples(sy)
        old = [rng.normal(size=3) for _ in range(2)]
        weights = LossWeights(lam=2.0)

        def build_session():
            bound = BoundParams(store, GradTape())
            terms = session_loss(bound, sx, sy, triplets, mask, old, weights)
            return terms.total, [bound.nodes[k] for k, _ in store.param_items()]

        worst = max(worst, finite_difference_check(build_session, params, 1e-6))
    if worst > 1e-4:
        raise AssertionError(f"worst relative gradient error {worst:g} > 1e-4")
    return f"worst relative error {worst:.2e}"


def _check_selection() -> str:
    rng = np.random.default_rng(7)
    store = _tiny_store(7)
    for layer in store.extractor:
        layer.weights[...] = rng.normal(size=layer.weights.shape)
        layer.bias[...] = rng.normal(size=layer.bias.shape)
    mask = select_session_trainable(store, 0.25)
    for sel, layer in zip(mask.layers, store.extractor):
        pool = np.concatenate([np.abs(layer.weights.reshape(-1)), np.abs(layer.bias)])
        k = selected_count(0.25, pool.size)
        if sel.n_trainable != k:
            raise AssertionError(f"layer {sel.layer}: {sel.n_trainable} trainable, wanted {k}")
        picked = np.concatenate([sel.weight_trainable,
                                 sel.bias_trainable + layer.weights.size])
        expected = np.sort(np.argsort(pool, kind="stable")[:k])
        if not np.array_equal(np.sort(picked), expected):
            raise AssertionError(f"layer {sel.layer}: selection differs from sort oracle")
        if sel.n_trainable + sel.weight_frozen.size + sel.bias_frozen.size != pool.size:
            raise AssertionError("trainable and frozen sets do not partition the layer")
    return f"{mask.n_trainable} trainable / {mask.n_frozen} frozen"


def _check_classification() -> str:
    rng = np.random.default_rng(11)
    registry = PrototypeRegistry()
    protos = {lab: rng.normal(size=6) for lab in range(7)}
    registry.register(protos, session=1, counts={lab: 1 for lab in protos})
    for _ in range(200):
        f = rng.normal(size=6)
        best, best_d = None, None
        for lab in sorted(protos):
            d = engine.euclidean_distance(f, protos[lab])
            if best_d is None or d < best_d:
                best, best_d = lab, d
        if registry.classify(f) != best:
            raise AssertionError("classify disagrees with the linear scan")
    return "200 instances match the linear scan"


def _check_checkpoint(tmp_path: str) -> str:
    import os
    store = _tiny_store(3)
    path = os.path.join(tmp_path, "ckpt.json")
    save_checkpoint(store, path)
    loaded = load_checkpoint(path)
    for (k1, a), (k2, b) in zip(store.param_items(), loaded.param_items()):
        if k1 != k2 or not np.array_equal(a, b):
            raise AssertionError(f"parameter {k1} did not survive the round trip")
    return "bit-exact round trip"


def _check_determinism() -> str:
    from .data import SyntheticSpec, generate_synthetic
    from .protocol import TrainConfig, build_schedule, run_protocol
    from .model import Arch

    spec = SyntheticSpec(num_classes=6, dim=5, train_per_class=20, test_per_class=5,
                         seed=5)
    corpus = generate_synthetic(spec)
    schedule = build_schedule(corpus.train, corpus.test, base_classes=4, ways=2,
                              shots=2, increments=1, seed=5)
    cfg = TrainConfig(base_epochs=3, base_lr_drops=(2,), session_epochs=5,
                      session_lr=0.01, seed=5)
    arch = Arch(hidden_dims=(8,), feature_dim=4)
    texts = []
    for _ in range(2):
        report, _, _ = run_protocol(schedule, "FSLL", cfg, arch)
        texts.append(report.to_csv_text())
    if texts[0] != texts[1]:
        raise AssertionError("two identical runs produced different metrics")
    return "repeated run is byte-identical"


def run_all(tmp_path: str) -> int:
    """Run every probe, print one line each, return the failure count."""
    checks = [
        ("loss gradients vs finite differences", _check_gradients),
        ("magnitude selection vs sort oracle", _check_selection),
        ("nearest-prototype vs linear scan", lambda: _check_classification()),
        ("checkpoint round trip", lambda: _check_checkpoint(tmp_path)),
        ("run determinism", _check_determinism),
    ]
    failures = 0
    for name, fn in checks:
        try:
            detail = fn()
        except Exception as exc:  # report and keep going
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name} ({detail})")
    return failures
