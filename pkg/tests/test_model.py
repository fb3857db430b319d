import json

import numpy as np
import pytest

from fsll.engine import GradTape
from fsll.errors import ProtocolError, ShapeError
from fsll.losses import base_loss
from fsll.model import (GROUP_CLASSIFIER, GROUP_EXTRACTOR, GROUP_ROTATION,
                        KIND_BIAS, KIND_WEIGHT, Arch, BoundParams, DenseLayer,
                        ModelConfig, ParamAddress, ParameterStore,
                        classify_logits, discard_classifier, extract_features,
                        load_checkpoint, save_checkpoint, snapshot_params)


def _store(seed=0, **kw):
    cfg = ModelConfig(input_dim=kw.pop("input_dim", 4),
                      hidden_dims=kw.pop("hidden_dims", (5,)),
                      feature_dim=kw.pop("feature_dim", 3),
                      base_classes=kw.pop("base_classes", 3), **kw)
    return ParameterStore.initialize(cfg, seed)


# ---------------------------------------------------------------------------
# configuration and initialisation

def test_model_config_rejects_bad_widths():
    with pytest.raises(ValueError):
        ModelConfig(input_dim=0)
    with pytest.raises(ValueError):
        ModelConfig(input_dim=4, hidden_dims=(0,))


def test_rotation_head_width_is_fixed():
    with pytest.raises(ValueError):
        ModelConfig(input_dim=4, rotation_classes=8)


def test_model_config_dict_round_trip():
    cfg = ModelConfig(input_dim=7, hidden_dims=(9, 5), feature_dim=4, base_classes=6)
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg


def test_initialize_is_pure_in_config_and_seed():
    a, b = _store(seed=42), _store(seed=42)
    for (ka, va), (kb, vb) in zip(a.param_items(), b.param_items()):
        assert ka == kb
        assert np.array_equal(va, vb)
    c = _store(seed=43)
    assert not all(np.array_equal(va, vc) for (_, va), (_, vc)
                   in zip(a.param_items(), c.param_items()))


def test_initialize_bounds_and_zero_biases():
    store = _store(seed=7)
    dims = store.config.extractor_dims
    for layer, (fi, fo) in zip(store.extractor, zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (fi + fo))
        assert np.abs(layer.weights).max() <= limit
        assert np.array_equal(layer.bias, np.zeros(fo))
    assert np.array_equal(store.classifier.bias, np.zeros(3))
    assert store.rotation.weights.shape == (3, 4)


def test_param_items_order_is_stable():
    keys = [k for k, _ in _store().param_items()]
    assert keys == [
        (GROUP_EXTRACTOR, 0, KIND_WEIGHT), (GROUP_EXTRACTOR, 0, KIND_BIAS),
        (GROUP_EXTRACTOR, 1, KIND_WEIGHT), (GROUP_EXTRACTOR, 1, KIND_BIAS),
        (GROUP_CLASSIFIER, 0, KIND_WEIGHT), (GROUP_CLASSIFIER, 0, KIND_BIAS),
        (GROUP_ROTATION, 0, KIND_WEIGHT), (GROUP_ROTATION, 0, KIND_BIAS),
    ]


def test_array_lookup_errors():
    store = _store()
    with pytest.raises(ValueError):
        store.array(("extractor", 9, KIND_WEIGHT))
    with pytest.raises(ValueError):
        store.array((GROUP_EXTRACTOR, 0, "momentum"))


def test_discard_classifier_once_only():
    store = _store()
    discard_classifier(store)
    assert store.classifier is None
    assert (GROUP_CLASSIFIER, 0, KIND_WEIGHT) not in dict(store.param_items())
    with pytest.raises(ProtocolError):
        discard_classifier(store)
    with pytest.raises(ProtocolError):
        classify_logits(store, np.zeros((1, 3)))


def test_dense_layer_validation():
    with pytest.raises(ShapeError):
        DenseLayer(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        DenseLayer(np.zeros(6), np.zeros(3))


def test_extractor_param_count():
    store = _store()  # 4*5+5 + 5*3+3 = 43
    assert store.extractor_param_count == 43


# ---------------------------------------------------------------------------
# forward paths

def test_zero_weights_give_zero_features():
    store = _store()
    for layer in store.extractor:
        layer.weights[...] = 0.0
        layer.bias[...] = 0.0
    out = extract_features(store, np.ones((2, 4)))
    assert np.array_equal(out, np.zeros((2, 3)))


def test_final_extractor_layer_is_linear():
    # a relu after the last layer would clip this negative output
    store = _store(hidden_dims=())
    store.extractor[0].weights[...] = -1.0
    store.extractor[0].bias[...] = 0.0
    out = extract_features(store, np.ones((1, 4)))
    assert np.all(out < 0.0)


def test_hidden_layers_apply_relu():
    store = _store()
    store.extractor[0].weights[...] = -1.0
    store.extractor[0].bias[...] = 0.0
    store.extractor[1].weights[...] = 1.0
    store.extractor[1].bias[...] = 2.5
    # the hidden activation is clipped to 0, so only the bias survives
    out = extract_features(store, np.ones((1, 4)))
    assert np.allclose(out, np.full((1, 3), 2.5))


def test_features_shape_check():
    store = _store()
    with pytest.raises(ShapeError):
        extract_features(store, np.ones((2, 5)))


def test_bound_params_leaves_alias_live_arrays():
    store = _store()
    bound = BoundParams(store, GradTape())
    key = (GROUP_EXTRACTOR, 0, KIND_WEIGHT)
    assert bound.nodes[key].value is store.array(key)


def test_gradient_map_zeroes_untouched_heads():
    store = _store()
    x = np.random.default_rng(0).normal(size=(4, 4))
    y = np.array([0, 1, 2, 0])
    tape = GradTape()
    bound = BoundParams(store, tape)
    tape.backward(base_loss(bound, x, y))
    grads = bound.gradient_map()
    assert np.array_equal(grads[(GROUP_ROTATION, 0, KIND_WEIGHT)],
                          np.zeros((3, 4)))
    assert np.abs(grads[(GROUP_CLASSIFIER, 0, KIND_WEIGHT)]).sum() > 0.0


def test_bound_params_unknown_key():
    bound = BoundParams(_store(), GradTape())
    with pytest.raises(ValueError):
        bound.node(("extractor", 5, KIND_WEIGHT))


# ---------------------------------------------------------------------------
# addresses and snapshots

def test_param_address_dotted():
    addr = ParamAddress(GROUP_EXTRACTOR, 1, KIND_WEIGHT, 17)
    assert addr.dotted() == "extractor.1.weight[17]"
    assert addr.key == (GROUP_EXTRACTOR, 1, KIND_WEIGHT)


def test_snapshot_copies_values():
    store = _store()
    addr = ParamAddress(GROUP_EXTRACTOR, 0, KIND_WEIGHT, 3)
    before = store.value_at(addr)
    snap = snapshot_params(store, [addr])
    store.extractor[0].weights.reshape(-1)[3] += 1.0
    assert snap.value_at(addr) == before
    assert store.value_at(addr) == before + 1.0
    assert len(snap) == 1
    assert snap.addresses() == [addr]


def test_snapshot_rejects_duplicates_and_bad_offsets():
    store = _store()
    addr = ParamAddress(GROUP_EXTRACTOR, 0, KIND_BIAS, 0)
    with pytest.raises(ValueError):
        snapshot_params(store, [addr, addr])
    with pytest.raises(ValueError):
        snapshot_params(store, [ParamAddress(GROUP_EXTRACTOR, 0, KIND_BIAS, 99)])


def test_snapshot_value_at_unknown_address():
    store = _store()
    snap = snapshot_params(store, [ParamAddress(GROUP_EXTRACTOR, 0, KIND_BIAS, 0)])
    with pytest.raises(KeyError):
        snap.value_at(ParamAddress(GROUP_EXTRACTOR, 0, KIND_BIAS, 1))
    with pytest.raises(KeyError):
        snap.value_at(ParamAddress(GROUP_EXTRACTOR, 1, KIND_BIAS, 0))


# ---------------------------------------------------------------------------
# checkpoints

def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    store = _store(seed=99)
    # make values ugly on purpose
    store.extractor[0].weights[0, 0] = 1.0 / 3.0
    store.extractor[1].weights[0, 0] = np.nextafter(0.1, 1.0)
    path = tmp_path / "ckpt.json"
    save_checkpoint(store, path)
    loaded = load_checkpoint(path)
    assert loaded.config == store.config
    assert loaded.seed == store.seed
    for (ka, va), (kb, vb) in zip(store.param_items(), loaded.param_items()):
        assert ka == kb
        assert np.array_equal(va, vb)


def test_checkpoint_round_trip_after_discard(tmp_path):
    store = _store()
    discard_classifier(store)
    path = tmp_path / "ckpt.json"
    save_checkpoint(store, path)
    assert load_checkpoint(path).classifier is None


def test_checkpoint_rejects_foreign_json(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_checkpoint_rejects_shape_tamper(tmp_path):
    store = _store()
    path = tmp_path / "ckpt.json"
    save_checkpoint(store, path)
    doc = json.loads(path.read_text())
    doc["extractor"][0]["weights"] = [[1.0, 2.0], [3.0, 4.0]]
    doc["extractor"][0]["bias"] = [0.0, 0.0]
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_arch_defaults():
    arch = Arch()
    assert arch.hidden_dims == (64,)
    assert arch.feature_dim == 32
