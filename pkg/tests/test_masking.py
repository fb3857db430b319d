import json

import numpy as np
import pytest

from fsll.masking import (SessionMask, apply_masked_update, mask_to_dict,
                          reselect_for_next_session, select_session_trainable,
                          selected_count, write_mask)
from fsll.model import (GROUP_EXTRACTOR, KIND_BIAS, KIND_WEIGHT, ModelConfig,
                        ParameterStore)


def _store(seed=0, dims=(4, 5, 3)):
    cfg = ModelConfig(input_dim=dims[0], hidden_dims=dims[1:-1],
                      feature_dim=dims[-1], base_classes=3)
    return ParameterStore.initialize(cfg, seed)


def _fill_random(store, seed):
    rng = np.random.default_rng(seed)
    for layer in store.extractor:
        layer.weights[...] = rng.normal(size=layer.weights.shape)
        layer.bias[...] = rng.normal(size=layer.bias.shape)


def _oracle_pick(layer, fraction):
    """Independent route: python sort on (magnitude, combined offset)."""
    pool = np.concatenate([np.abs(layer.weights.reshape(-1)), np.abs(layer.bias)])
    k = selected_count(fraction, pool.size)
    ranked = sorted(range(pool.size), key=lambda i: (pool[i], i))
    return sorted(ranked[:k])


# ---------------------------------------------------------------------------
# selected_count

def test_selected_count_examples():
    assert selected_count(0.1, 100) == 10
    assert selected_count(0.0, 100) == 0
    assert selected_count(1.0, 7) == 7
    # round() convention, then bumped so a positive fraction never selects nothing
    assert selected_count(0.1, 4) == 1
    assert selected_count(0.001, 50) == 1
    assert selected_count(0.5, 5) == round(0.5 * 5)
    assert selected_count(0.3, 0) == 0


def test_selected_count_validation():
    with pytest.raises(ValueError):
        selected_count(-0.1, 10)
    with pytest.raises(ValueError):
        selected_count(1.5, 10)
    with pytest.raises(ValueError):
        selected_count(0.5, -1)


# ---------------------------------------------------------------------------
# selection

def test_selection_matches_sort_oracle():
    for seed in range(30):
        store = _store(dims=(3, 6, 4))
        _fill_random(store, seed)
        mask = select_session_trainable(store, 0.25)
        for sel, layer in zip(mask.layers, store.extractor):
            picked = sorted(list(sel.weight_trainable) +
                            [o + layer.weights.size for o in sel.bias_trainable])
            assert picked == _oracle_pick(layer, 0.25)


def test_selection_count_per_layer_is_exact():
    store = _store()
    _fill_random(store, 3)
    for fraction in (0.05, 0.1, 0.33, 0.9):
        mask = select_session_trainable(store, fraction)
        for sel in mask.layers:
            assert sel.n_trainable == selected_count(fraction, sel.pool_size)


def test_ties_break_toward_lower_offset():
    store = _store(dims=(2, 2))  # single layer, 4 weights + 2 biases
    store.extractor[0].weights[...] = 0.5  # all tied
    store.extractor[0].bias[...] = 0.5
    mask = select_session_trainable(store, 0.5)
    sel = mask.layers[0]
    assert list(sel.weight_trainable) == [0, 1, 2]
    assert list(sel.bias_trainable) == []
    assert sel.threshold == 0.5


def test_threshold_is_kth_smallest_magnitude():
    store = _store(dims=(2, 2))
    store.extractor[0].weights[...] = np.array([[3.0, -1.0], [2.0, -4.0]])
    store.extractor[0].bias[...] = np.array([0.5, 5.0])
    mask = select_session_trainable(store, 0.5)  # k = 3 of 6
    sel = mask.layers[0]
    assert sel.threshold == 2.0
    assert sorted(sel.weight_trainable) == [1, 2]  # |-1|, |2|
    assert sorted(sel.bias_trainable) == [0]       # |0.5|
    trainable_mags = [0.5, 1.0, 2.0]
    frozen_mags = [3.0, 4.0, 5.0]
    assert max(trainable_mags) <= sel.threshold <= min(frozen_mags)


def test_trainable_and_frozen_partition_each_layer():
    store = _store(dims=(5, 7, 4))
    _fill_random(store, 11)
    mask = select_session_trainable(store, 0.3)
    for sel, layer in zip(mask.layers, store.extractor):
        w = layer.weights.size
        all_offsets = (list(sel.weight_trainable) +
                       [o + w for o in sel.bias_trainable] +
                       list(sel.weight_frozen) +
                       [o + w for o in sel.bias_frozen])
        assert sorted(all_offsets) == list(range(layer.size))


def test_fraction_edge_cases():
    store = _store()
    _fill_random(store, 5)
    everything = select_session_trainable(store, 1.0)
    assert everything.n_frozen == 0
    assert everything.n_trainable == store.extractor_param_count
    nothing = select_session_trainable(store, 0.0)
    assert nothing.n_trainable == 0
    assert nothing.layers[0].threshold == 0.0
    with pytest.raises(ValueError):
        select_session_trainable(store, 1.2)


def test_heads_never_enter_the_mask():
    store = _store()
    mask = select_session_trainable(store, 1.0)
    groups = {addr.group for addr in mask.trainable_addresses()}
    assert groups == {GROUP_EXTRACTOR}


def test_snapshot_covers_exactly_the_trainable_set():
    store = _store()
    _fill_random(store, 8)
    mask = select_session_trainable(store, 0.2)
    assert sorted(mask.snapshot.addresses()) == sorted(mask.trainable_addresses())
    for addr in mask.trainable_addresses():
        assert mask.snapshot.value_at(addr) == store.value_at(addr)


def test_reselect_advances_session_and_follows_current_values():
    store = _store(dims=(2, 2))
    store.extractor[0].weights[...] = np.array([[1.0, 2.0], [3.0, 4.0]])
    store.extractor[0].bias[...] = np.array([5.0, 6.0])
    first = select_session_trainable(store, 0.34, session=2)
    assert list(first.layers[0].weight_trainable) == [0, 1]
    store.extractor[0].weights[...] = np.array([[9.0, 9.0], [9.0, 0.1]])
    second = reselect_for_next_session(store, 0.34, first)
    assert second.session == first.session + 1
    assert list(second.layers[0].weight_trainable) == [3]
    assert list(second.layers[0].bias_trainable) == [0]


# ---------------------------------------------------------------------------
# masked updates

def test_update_touches_only_trainable_entries():
    store = _store()
    _fill_random(store, 21)
    mask = select_session_trainable(store, 0.25)
    before = {key: arr.copy() for key, arr in store.param_items()}
    grads = {key: np.ones_like(arr) for key, arr in store.param_items()}
    apply_masked_update(store, mask, grads, lr=0.5)
    for addr in mask.trainable_addresses():
        assert store.value_at(addr) == before[addr.key].reshape(-1)[addr.offset] - 0.5
    for addr in mask.frozen_addresses():
        a = store.array(addr.key).reshape(-1)[addr.offset]
        b = before[addr.key].reshape(-1)[addr.offset]
        assert a == b
    # heads too: never written by the session path
    for group in ("classifier", "rotation"):
        for kind in (KIND_WEIGHT, KIND_BIAS):
            assert np.array_equal(store.array((group, 0, kind)),
                                  before[(group, 0, kind)])


def test_update_accepts_missing_gradient_arrays():
    store = _store()
    _fill_random(store, 2)
    mask = select_session_trainable(store, 0.5)
    before = {key: arr.copy() for key, arr in store.param_items()}
    apply_masked_update(store, mask, {}, lr=0.1)
    for key, arr in store.param_items():
        assert np.array_equal(arr, before[key])


def test_update_validation():
    store = _store()
    mask = select_session_trainable(store, 0.5)
    good = {(GROUP_EXTRACTOR, 0, KIND_WEIGHT): np.zeros((4, 5))}
    with pytest.raises(ValueError):
        apply_masked_update(store, mask, good, lr=0.0)
    with pytest.raises(ValueError):
        apply_masked_update(store, mask,
                            {(GROUP_EXTRACTOR, 0, KIND_WEIGHT): np.zeros((2, 2))},
                            lr=0.1)
    with pytest.raises(ValueError):
        apply_masked_update(store, mask, {("extractor", 7, KIND_WEIGHT): np.zeros(1)},
                            lr=0.1)


def test_snapshot_survives_updates():
    store = _store()
    _fill_random(store, 4)
    mask = select_session_trainable(store, 0.3)
    anchored = {addr: mask.snapshot.value_at(addr)
                for addr in mask.trainable_addresses()}
    grads = {key: np.full_like(arr, 2.0) for key, arr in store.param_items()}
    apply_masked_update(store, mask, grads, lr=1.0)
    for addr, value in anchored.items():
        assert mask.snapshot.value_at(addr) == value
        assert store.value_at(addr) != value


# ---------------------------------------------------------------------------
# diagnostics

def test_mask_dump_round_trips_through_json(tmp_path):
    store = _store()
    _fill_random(store, 6)
    mask = select_session_trainable(store, 0.2, session=3)
    path = tmp_path / "mask.json"
    write_mask(mask, path)
    doc = json.loads(path.read_text())
    assert doc == mask_to_dict(mask)
    assert doc["session"] == 3
    assert doc["fraction"] == 0.2
    assert doc["n_trainable"] == mask.n_trainable
    total = sum(l["pool_size"] for l in doc["layers"])
    assert total == store.extractor_param_count
