import dataclasses

import numpy as np
import pytest

from mmft.datagen import GenSpec, generate
from mmft.datagen.generate import Document, EventTypeSpec
from mmft.encoders import EventGraph, EventNode
from mmft.errors import ConfigError, InputError, ParseError
from mmft.gradsuites import tiny_config
from mmft.model import MMFTModel, init_params
from mmft.params import ModelParams
from mmft.pipeline import FeatureStore, Splits, make_labels

CFG = tiny_config(seq_len=16, event_feature_dim=4, lookback=8, batch_size=4)


@pytest.fixture(scope="module")
def ds():
    return generate(GenSpec(seed=5, n_symbols=2, n_days=240,
                            event_types=(EventTypeSpec("a", 0.7, count=3), EventTypeSpec("b", -0.4, count=3))))


@pytest.fixture(scope="module")
def store(ds):
    return FeatureStore(ds, CFG)


def test_splits_are_date_ordered_with_embargo(store):
    sp = store.splits
    assert sp.train.max() < sp.val.min() and sp.val.max() < sp.test.min()
    assert sp.val.min() - sp.train.max() == CFG.embargo + 1
    assert sp.test.max() + CFG.label_horizon == store.n_days - 1


def test_overlapping_splits_rejected():
    with pytest.raises(InputError):
        Splits(np.arange(0, 10), np.arange(5, 15), np.arange(20, 30))
    with pytest.raises(InputError):
        Splits(np.arange(0, 10), np.array([], dtype=int), np.arange(20, 30))


def test_standardisation_uses_training_days_only(ds, store):
    tr = store.splits.train
    # scaled to unit root-mean-square, not centred
    np.testing.assert_allclose(np.sqrt(np.mean(store.y[:, tr] ** 2, axis=1)), 1, atol=1e-12)
    np.testing.assert_allclose(store.y * store.ret_scale[:, None], store.ret, atol=1e-15)
    changed = dataclasses.replace(ds, prices=ds.prices.copy())
    changed.prices[:, tr.max() + 20:, :4] *= 1.5
    other = FeatureStore(changed, CFG)
    np.testing.assert_array_equal(other.ret_scale, store.ret_scale)
    np.testing.assert_array_equal(other.tech_windows[:, tr], store.tech_windows[:, tr])


def test_labels():
    close = np.exp(np.array([[0.0, 0.02, 0.0, -0.03, -0.03, -0.03]]))
    np.testing.assert_array_equal(make_labels(close, 1, 0.01, -0.01), [[2, 0, 0, 1, 1, -1]])


def test_batch_alignment(store):
    b = store.batch([0, 1], [10, 20], 5, split="train")
    assert b.shape == (2, 5)
    assert b.tech.shape == (2, 5, CFG.lookback, 5) and b.macro.shape[:2] == (2, 5)
    np.testing.assert_array_equal(b.days[1], np.arange(20, 25))
    np.testing.assert_array_equal(b.ret[0], store.ret[0, 10:15])
    np.testing.assert_array_equal(b.loss_mask[0], [d in store.splits.train for d in range(10, 15)])
    with pytest.raises(InputError):
        store.batch([0], [store.n_days - 2], 5)


def test_train_windows_cover_training_span(store):
    wins = store.train_windows(np.random.default_rng(0), 16)
    tr = set(store.splits.train.tolist())
    for s in range(store.n_symbols):
        covered = set()
        for si, st in wins:
            if si == s:
                covered |= set(range(st, st + 16))
        assert tr <= covered


def test_unknown_channel_tag(store):
    with pytest.raises(ConfigError):
        MMFTModel.init(CFG, store, seed=0, drop=("Z",))


def test_parameter_init_is_seeded(store):
    a = init_params(CFG, store.n_indicators, seed=3)
    assert a.equals(init_params(CFG, store.n_indicators, seed=3))
    assert not a.equals(init_params(CFG, store.n_indicators, seed=4))


def predictions(ds, days, params=None, exclude=()):
    store = FeatureStore(ds, CFG)
    model = MMFTModel(CFG, params, store) if params is not None else MMFTModel.init(CFG, store, seed=1)
    return model, model.predict_days(days, exclude=exclude)["y_raw"]


def test_future_inputs_do_not_leak(ds):
    cut = 200
    days = np.arange(150, cut + 1)
    model, base = predictions(ds, days)
    later = dataclasses.replace(ds, prices=ds.prices.copy(), docs=list(ds.docs))
    later.prices[:, cut + 1:, :4] *= np.exp(np.linspace(0.1, 0.5, ds.n_days - cut - 1))[None, :, None]
    later.docs = sorted(later.docs + [Document(cut + 3, "S00", "record surge beat")],
                        key=lambda d: (d.ordinal, d.symbol))
    nodes = ds.events.nodes + (EventNode("late", "a", cut + 2, (5.0, 5.0, 5.0, 5.0)),)
    later.events = EventGraph(nodes, ds.events.edges + ((ds.events.nodes[0].id, "late", "related"),))
    _, after = predictions(later, days, model.params)
    np.testing.assert_array_equal(base, after)


def test_excluding_event_equals_removing_it(ds):
    days = np.arange(100, 200)
    node = ds.events.nodes[1]
    model, masked = predictions(ds, days, exclude=(node.id,))
    keep = tuple(n for n in ds.events.nodes if n.id != node.id)
    edges = tuple(e for e in ds.events.edges if node.id not in e[:2])
    removed = dataclasses.replace(ds, events=EventGraph(keep, edges))
    # node type ids must match; the removed node's type still occurs elsewhere
    assert {n.type for n in keep} == {n.type for n in ds.events.nodes}
    _, direct = predictions(removed, days, model.params)
    np.testing.assert_allclose(masked, direct, atol=1e-14)


def test_checkpoint_round_trip_and_rejection(tmp_path, store):
    p = init_params(CFG, store.n_indicators, seed=0)
    path = tmp_path / "m.mmft"
    p.save(path)
    assert ModelParams.load(path).equals(p)
    blob = path.read_bytes()
    for bad in (b"XXXX" + blob[4:], blob[:-3], blob + b"\0"):
        with pytest.raises(ParseError):
            ModelParams.from_bytes(bad)
