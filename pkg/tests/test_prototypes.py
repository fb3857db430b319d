import json

import numpy as np
import pytest

from fsll.engine import euclidean_distance
from fsll.errors import ProtocolError
from fsll.model import ModelConfig, ParameterStore
from fsll.prototypes import (PrototypeRegistry, class_counts,
                             compute_prototypes, evaluate_accuracy,
                             mean_pairwise_cosine, write_registry)


def _registry(vectors: dict, session=1):
    reg = PrototypeRegistry()
    reg.register({lab: np.asarray(v, dtype=float) for lab, v in vectors.items()},
                 session=session, counts={lab: 1 for lab in vectors})
    return reg


def _scan(reg, feature):
    """Second route: scalar linear scan in label order."""
    best, best_d = None, None
    for lab in reg.labels():
        d = euclidean_distance(np.asarray(feature, float), reg.entry(lab).vector)
        if best_d is None or d < best_d:
            best, best_d = lab, d
    return best


# ---------------------------------------------------------------------------
# registry basics

def test_register_and_lookup():
    reg = _registry({2: [1.0, 0.0], 0: [0.0, 1.0]})
    assert len(reg) == 2
    assert reg.labels() == [0, 2]
    assert 2 in reg and 1 not in reg
    assert np.array_equal(reg.entry(2).vector, np.array([1.0, 0.0]))
    assert [e.label for e in reg.entries()] == [0, 2]


def test_register_copies_vectors():
    vec = np.array([1.0, 2.0])
    reg = PrototypeRegistry()
    reg.register({0: vec, 1: np.array([0.0, 0.0])}, session=1, counts={0: 3, 1: 3})
    vec[0] = 99.0
    assert reg.entry(0).vector[0] == 1.0


def test_registry_grows_only():
    reg = _registry({0: [1.0], 1: [2.0]})
    reg.register({2: np.array([3.0])}, session=2, counts={2: 5})
    assert reg.labels() == [0, 1, 2]
    assert reg.entry(0).session == 1
    assert reg.entry(2).session == 2
    assert reg.entry(2).count == 5
    with pytest.raises(ProtocolError):
        reg.register({1: np.array([9.0])}, session=3, counts={1: 1})
    # a rejected registration leaves the old entry alone
    assert reg.entry(1).vector[0] == 2.0


def test_prototype_must_be_1d():
    reg = PrototypeRegistry()
    with pytest.raises(ValueError):
        reg.register({0: np.ones((2, 2))}, session=1, counts={0: 1})


# ---------------------------------------------------------------------------
# classification

def test_classify_matches_linear_scan(rng):
    reg = _registry({lab: rng.normal(size=5) for lab in range(9)})
    for _ in range(300):
        f = rng.normal(size=5)
        assert reg.classify(f) == _scan(reg, f)


def test_classify_batch_equals_per_row_classify(rng):
    reg = _registry({lab: rng.normal(size=4) for lab in range(6)})
    feats = rng.normal(size=(50, 4))
    batch = reg.classify_batch(feats)
    assert list(batch) == [reg.classify(row) for row in feats]


def test_classify_tie_goes_to_smaller_label():
    # equidistant prototypes; registration order must not matter
    reg = PrototypeRegistry()
    reg.register({7: np.array([-1.0, 0.0])}, session=1, counts={7: 1})
    reg.register({3: np.array([1.0, 0.0])}, session=2, counts={3: 1})
    assert reg.classify(np.zeros(2)) == 3


def test_classify_empty_registry():
    with pytest.raises(ProtocolError):
        PrototypeRegistry().classify(np.zeros(2))
    with pytest.raises(ProtocolError):
        PrototypeRegistry().classify_batch(np.zeros((1, 2)))


def test_classify_dimension_check():
    reg = _registry({0: [1.0, 2.0]})
    with pytest.raises(ValueError):
        reg.classify(np.zeros(3))


def test_classify_cache_refreshes_after_register(rng):
    reg = _registry({0: [5.0, 5.0]})
    assert reg.classify(np.zeros(2)) == 0
    reg.register({1: np.array([0.1, 0.1])}, session=2, counts={1: 1})
    assert reg.classify(np.zeros(2)) == 1


# ---------------------------------------------------------------------------
# prototype computation and evaluation

def test_compute_prototypes_is_the_group_mean(rng):
    cfg = ModelConfig(input_dim=4, hidden_dims=(6,), feature_dim=3, base_classes=3)
    store = ParameterStore.initialize(cfg, 3)
    x = rng.normal(size=(30, 4))
    y = rng.integers(0, 3, size=30)
    protos = compute_prototypes(store, x, y)
    from fsll.model import extract_features
    feats = extract_features(store, x)
    for lab in (0, 1, 2):
        assert np.allclose(protos[lab], feats[y == lab].mean(axis=0), atol=1e-12)


def test_compute_prototypes_empty_batch():
    cfg = ModelConfig(input_dim=2, hidden_dims=(), feature_dim=2, base_classes=2)
    store = ParameterStore.initialize(cfg, 0)
    with pytest.raises(ValueError):
        compute_prototypes(store, np.zeros((0, 2)), np.zeros(0, dtype=int))


def test_class_counts():
    assert class_counts(np.array([4, 4, 2, 4])) == {2: 1, 4: 3}


def test_evaluate_accuracy_perfect_and_errors():
    cfg = ModelConfig(input_dim=2, hidden_dims=(), feature_dim=2, base_classes=2)
    store = ParameterStore.initialize(cfg, 0)
    store.extractor[0].weights[...] = np.eye(2)
    store.extractor[0].bias[...] = 0.0
    x = np.array([[0.0, 0.0], [10.0, 10.0], [0.1, -0.1], [9.9, 10.2]])
    y = np.array([0, 1, 0, 1])
    reg = _registry({0: [0.0, 0.0], 1: [10.0, 10.0]})
    assert evaluate_accuracy(store, reg, x, y) == 1.0
    with pytest.raises(ProtocolError):
        evaluate_accuracy(store, reg, x, np.array([0, 1, 0, 2]))
    with pytest.raises(ValueError):
        evaluate_accuracy(store, reg, np.zeros((0, 2)), np.zeros(0, dtype=int))


def test_mean_pairwise_cosine():
    new = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    old = [np.array([1.0, 0.0])]
    assert mean_pairwise_cosine(new, old) == pytest.approx(0.5)
    assert np.isnan(mean_pairwise_cosine(new, []))
    assert np.isnan(mean_pairwise_cosine([], old))


def test_write_registry(tmp_path):
    reg = _registry({1: [0.5, 0.25]})
    path = tmp_path / "registry.json"
    write_registry(reg, path)
    doc = json.loads(path.read_text())
    assert doc["classes"] == [{"label": 1, "session": 1, "count": 1,
                               "prototype": [0.5, 0.25]}]
