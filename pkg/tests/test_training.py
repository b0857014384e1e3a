import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmft.datagen import GenSpec, generate
from mmft.datagen.generate import EventTypeSpec
from mmft.errors import ConfigError, DimensionError, InputError, ParameterError, UndefinedMetricError
from mmft.fusion import PredictionOutput
from mmft.gradsuites import tiny_config
from mmft.numerics import Tensor
from mmft.training import (
    AdamState,
    LossWeights,
    ablation_table,
    accuracy,
    adam_step,
    convergence_harness,
    evaluate,
    focal_loss,
    gd_step,
    impact_coefficient,
    impact_duration,
    l2_loss,
    rmse,
    sharpe,
    step_rate,
    total_loss,
    train,
)


# -- losses --------------------------------------------------------------------

def test_l2_examples():
    assert l2_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0])).item() == 0
    assert l2_loss(np.zeros(2), np.ones(2)).item() == 1
    assert l2_loss(np.array([1.0, 2.0]), np.array([3.0, 0.0])).item() == 4
    with pytest.raises(DimensionError):
        l2_loss(np.zeros(2), np.zeros(3))


def logits_for(p_t, label=0):
    # two other classes share the remaining mass equally
    z = np.log(np.full(3, (1 - p_t) / 2))
    z[label] = np.log(p_t)
    return z


def test_focal_reduces_to_cross_entropy():
    z = np.log(np.array([0.5, 0.25, 0.25]))
    assert focal_loss(z, np.array(0), alpha=1.0, gamma=0.0).item() == pytest.approx(math.log(2), abs=1e-12)


def test_focal_standard_weights():
    # -0.25 * 0.1**2 * log(0.9), evaluated by hand
    assert focal_loss(logits_for(0.9), np.array(0)).item() == pytest.approx(2.634013e-4, rel=1e-6)


def test_focal_vanishes_as_prediction_becomes_certain():
    values = [focal_loss(logits_for(p), np.array(0)).item() for p in (0.9, 0.99, 0.999999)]
    assert values[0] > values[1] > values[2] and values[2] < 1e-15


def test_focal_rejects_bad_label():
    with pytest.raises(InputError):
        focal_loss(np.zeros(3), np.array(3))
    with pytest.raises(InputError):
        focal_loss(np.zeros(3), np.array(-1))


def test_total_loss_weights(rng):
    out = PredictionOutput(Tensor(rng.normal(size=(2, 4))), Tensor(rng.normal(size=(2, 4, 3))))
    y, labels = rng.normal(size=(2, 4)), rng.integers(0, 3, size=(2, 4))
    reg_only = total_loss(out, y, labels, LossWeights(lambda_reg=2.0, lambda_cls=0.0)).item()
    assert reg_only == 2 * l2_loss(out.y_hat, y).item()
    assert total_loss(out, y, labels, LossWeights(0.0, 0.0)).item() == 0


def test_total_loss_matches_recomputation(rng):
    y_hat, logits = rng.normal(size=(3, 5)), rng.normal(size=(3, 5, 3))
    y, labels = rng.normal(size=(3, 5)), rng.integers(0, 3, size=(3, 5))
    mask = rng.random((3, 5)) < 0.7
    mask[0, 0] = True
    lw = LossWeights(0.7, 1.3, 0.4, 1.5)
    got = total_loss(PredictionOutput(Tensor(y_hat), Tensor(logits)), y, labels, lw, mask).item()
    p = np.exp(logits) / np.exp(logits).sum(axis=-1, keepdims=True)
    p_t = np.take_along_axis(p, labels[..., None], axis=-1)[..., 0]
    focal = -0.4 * (1 - p_t) ** 1.5 * np.log(p_t)
    want = 0.7 * ((y_hat - y) ** 2)[mask].mean() + 1.3 * focal[mask].mean()
    assert got == pytest.approx(want, abs=1e-12)


def test_negative_loss_weight_rejected():
    with pytest.raises(ParameterError):
        LossWeights(lambda_reg=-1.0)


# -- optimisers ------------------------------------------------------------------

def test_gd_examples():
    assert gd_step({"t": np.array(1.0)}, {"t": np.array(2.0)}, 0.5)["t"] == 0.0
    assert gd_step({"t": np.array(3.0)}, {"t": np.array(0.0)}, 0.1)["t"] == 3.0
    with pytest.raises(ParameterError):
        gd_step({"t": np.array(1.0)}, {"t": np.array(1.0)}, 0.0)


def test_gd_closed_form_on_quadratic():
    # loss a/2 theta^2: theta_k = (1 - eta a)^k theta_0
    a, eta, theta = 3.0, 0.1, {"t": np.array(2.0)}
    for k in range(1, 11):
        theta = gd_step(theta, {"t": a * theta["t"]}, eta)
        assert theta["t"] == pytest.approx(2.0 * (1 - eta * a) ** k, rel=1e-14)


def test_adam_zero_grads_keep_params():
    params, state = {"w": np.array([1.0, -2.0])}, AdamState(lr=0.1)
    for _ in range(20):
        params, state = adam_step(params, {"w": np.zeros(2)}, state)
    np.testing.assert_array_equal(params["w"], [1.0, -2.0])


def test_adam_first_step_is_lr_times_sign():
    params, _ = adam_step({"w": np.zeros(3)}, {"w": np.array([50.0, -20.0, 9.0])}, AdamState(lr=0.01))
    np.testing.assert_allclose(params["w"], [-0.01, 0.01, -0.01], rtol=1e-6)


def test_adam_matches_reference_loop(rng):
    grads = rng.normal(size=(5, 4))
    params, state = {"w": np.ones(4)}, AdamState(lr=0.05)
    for g in grads:
        params, state = adam_step(params, {"w": g}, state)
    w, m, v = np.ones(4), np.zeros(4), np.zeros(4)
    for t, g in enumerate(grads, start=1):
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w = w - 0.05 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(params["w"], w, atol=1e-12)


# -- convergence harness ------------------------------------------------------

def test_optimal_step_contracts_by_half_every_step():
    rep = convergence_harness(1.0, 3.0, 0.5, steps=200)
    k = np.arange(201)
    np.testing.assert_allclose(rep.distances, 0.5 ** k * math.sqrt(2), atol=1e-9, rtol=0)
    assert rep.passed and rep.rate == pytest.approx(0.5, abs=1e-15)


def test_isotropic_quadratic_converges_in_one_step():
    rep = convergence_harness(2.0, 2.0, 0.5, steps=5)
    assert rep.passed and np.all(np.asarray(rep.distances[1:]) == 0)
    assert rep.rate == 0


def test_near_limit_step_still_converges():
    assert convergence_harness(1.0, 3.0, 1.99 / 4).passed


@pytest.mark.parametrize("mu,L", [(1, 3), (0.5, 5), (2, 2)])
@pytest.mark.parametrize("c", [0.5, 1.0, 1.9])
def test_convergence_grid(mu, L, c):
    assert convergence_harness(mu, L, c / (mu + L), steps=200).passed


def test_rate_at_optimal_step_is_condition_ratio():
    for mu, L in [(1, 3), (0.5, 5), (1, 100)]:
        assert step_rate(mu, L, 2 / (mu + L)) == pytest.approx((L - mu) / (L + mu), abs=1e-12)


@pytest.mark.parametrize("mu,L,eta", [(0, 1, 0.1), (2, 1, 0.1), (1, 3, 0.0), (1, 3, 0.75)])
def test_harness_parameter_errors(mu, L, eta):
    with pytest.raises(ParameterError):
        convergence_harness(mu, L, eta)


# -- metrics -------------------------------------------------------------------

def test_metric_examples():
    assert rmse([1, 2], [1, 2]) == 0
    assert rmse([0, 0], [1, 1]) == 1
    assert rmse([1, 2], [3, 0]) == 2
    assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert accuracy([0, 0], [1, 1]) == 0.0
    assert accuracy([0, 1, 2, 0], [0, 1, 2, 1]) == 0.75
    with pytest.raises(InputError):
        rmse([], [])
    with pytest.raises(InputError):
        accuracy([], [])


def test_sharpe_examples():
    # mean 0.01, sample std 0.016330, computed by hand
    daily, annual = sharpe([0.01, 0.03, -0.01, 0.01])
    assert daily == pytest.approx(0.6123724357, abs=1e-9)
    assert annual == pytest.approx(daily * math.sqrt(252), abs=1e-12)
    with pytest.raises(UndefinedMetricError):
        sharpe([0.02, 0.02, 0.02])
    with pytest.raises(UndefinedMetricError):
        sharpe([0.02])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-10, 10), st.floats(0.01, 100))
def test_metric_properties(seed, c, scale):
    r = np.random.default_rng(seed)
    x = r.normal(size=20)
    assert rmse(x, x + c) == pytest.approx(abs(c), abs=1e-9)
    pred, true = r.integers(0, 3, 30), r.integers(0, 3, 30)
    perm = r.permutation(3)
    assert accuracy(perm[pred], perm[true]) == accuracy(pred, true)
    assert sharpe(x * scale)[0] == pytest.approx(sharpe(x)[0], rel=1e-9)


# -- training end to end ----------------------------------------------------------

def small_data(**changes):
    base = dict(seed=1, n_symbols=2, n_days=220,
                event_types=(EventTypeSpec("up", 0.8, count=2), EventTypeSpec("down", -0.6, count=2)))
    base.update(changes)
    return generate(GenSpec(**base))


def small_config(**changes):
    base = dict(epochs=1, seq_len=16, batch_size=4, lookback=8, d_model=8, learning_rate=1e-3, event_feature_dim=4)
    base.update(changes)
    return tiny_config(**base)


@pytest.fixture(scope="module")
def data():
    return small_data()


def test_one_epoch_smoke(data):
    res = train(small_config(), data)
    assert len(res.history) == 1 and math.isfinite(res.losses()[0])
    rep = evaluate(res.model, "val")
    assert rep.rmse >= 0 and 0 <= rep.accuracy <= 1


def test_same_seed_same_losses(data):
    cfg = small_config(epochs=2)
    a, b = train(cfg, data), train(cfg, data)
    assert a.losses() == b.losses()
    assert a.params.to_bytes() == b.params.to_bytes()
    assert train(cfg.replace(seed=1), data).losses() != a.losses()


def test_ablation_table_covers_every_channel(data):
    rows = ablation_table(small_config(), data)
    assert [r["variant"] for r in rows] == ["full", "w/o T", "w/o F", "w/o M", "w/o E"]
    assert all(r["rmse"] >= 0 for r in rows)


def test_unknown_channel_rejected(data):
    with pytest.raises(ConfigError):
        train(small_config(), data, drop=("X",))


def test_impact_duration_rule():
    assert impact_duration(np.zeros(5)) == 0
    assert impact_duration([1.0, 0.5, 0.2, 0.05, 0.0]) == 3
    assert impact_duration([-1.0, 0.0, 0.11, 0.0]) == 3


def test_future_node_has_no_impact_before_its_day():
    ds = small_data(event_types=(EventTypeSpec("late", 0.5, count=0),), planted_events=(("late", 200),),
                    related_edge_prob=0.0)
    res = train(small_config(), ds)
    node = res.model.store.graph.nodes[0]
    assert node.ordinal == 200
    out = impact_coefficient(res.model, node.id, horizon=63, start=100)
    assert out.coefficient == 0 and out.duration == 0
