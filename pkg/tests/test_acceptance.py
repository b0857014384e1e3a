"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line in the summary.

The planted-signal criteria train real models and take several minutes in total.
"""

import json
import math
import time

import numpy as np
import pytest

from mmft.config import desk_config
from mmft.datagen import GenSpec, generate, load_dataset, save_dataset
from mmft.datagen.generate import EventTypeSpec
from mmft.encoders import (
    EventGraph,
    EventNode,
    causal_mask,
    dwt_haar,
    event2vec,
    gat_layer,
    idwt_haar,
    init_event,
    multi_head_attention,
)
from mmft.fusion import gate_weights, init_fusion, trunk_forward
from mmft.gradsuites import SUITES, random_graph, run_suites, tiny_config
from mmft.model import MMFTModel
from mmft.numerics import Tensor, softmax
from mmft.params import ModelParams
from mmft.pipeline import FeatureStore
from mmft.training import (
    accuracy,
    convergence_harness,
    evaluate,
    focal_loss,
    impact_table,
    rmse,
    sharpe,
    train,
)
from mmft.errors import UndefinedMetricError

pytestmark = pytest.mark.acceptance

SEEDS = range(5)
# Event-planted data: two strong types of opposite sign and one weak type, short-lived
# so that consecutive events of a type rarely overlap. Events link only to earlier
# events of their own type.
EVENT_TYPES = tuple(EventTypeSpec(name, beta, half_life=5.0, count=20)
                    for name, beta in (("boom", 0.9), ("ripple", 0.1), ("bust", -0.78)))
EVENT_SPEC = dict(n_symbols=4, n_days=1000, text_strength=0.0, event_scale=0.02,
                  related_edge_prob=0.0, event_types=EVENT_TYPES)
# Sentiment-planted data: documents move next-day returns, no events.
TEXT_SPEC = dict(n_symbols=4, n_days=1000, text_strength=1.0, event_types=())
PLANT_RUN = dict(epochs=20, patience=6)


def majority(flags, need=4):
    return sum(bool(f) for f in flags) >= need


# -- 1 ----------------------------------------------------------------------

@pytest.mark.criterion(1, "convergence harness")
def test_convergence(detail):
    t0 = time.perf_counter()
    rep = convergence_harness(1.0, 3.0, 0.5, steps=200, theta0=(1.0, 1.0))
    expected = 0.5 ** np.arange(201) * math.sqrt(2.0)
    worst = float(np.abs(rep.distances - expected).max())
    grid = [convergence_harness(mu, L, c / (mu + L), steps=200).passed
            for mu, L in [(1, 3), (0.5, 5), (2, 2)] for c in (0.5, 1.0, 1.9)]
    seconds = time.perf_counter() - t0
    detail["text"] = f"max deviation {worst:.1e}, grid {sum(grid)}/9, {seconds:.3f}s"
    assert worst <= 1e-9 and rep.passed
    assert rep.optimal_rate == 0.5
    assert all(grid)
    assert seconds < 1.0


# -- 2 ----------------------------------------------------------------------

@pytest.mark.criterion(2, "finite-difference gradient suites")
def test_gradient_suites(detail):
    t0 = time.perf_counter()
    results = run_suites("all", instances=10, seed=0)
    seconds = time.perf_counter() - t0
    failed = [r.name for r in results if not r.passed]
    worst = max(r.max_rel_error for r in results)
    detail["text"] = f"{len(results) - len(failed)}/{len(results)} suites, worst rel error {worst:.1e}, {seconds:.1f}s"
    channels = {"encoders.technical", "encoders.text", "encoders.macro", "encoders.event2vec"}
    assert channels <= set(SUITES)
    assert all(r.instances >= 10 for r in results)
    assert not failed, failed
    assert seconds < 60


# -- 3 ----------------------------------------------------------------------

@pytest.mark.criterion(3, "exact structural invariants")
def test_structural_invariants(detail):
    rng = np.random.default_rng(0)
    sums = []
    for _ in range(20):
        x = rng.normal(scale=30, size=(6, 9))
        sums.append(np.abs(softmax(Tensor(x), axis=-1).data.sum(axis=-1) - 1).max())
        hs = [rng.normal(size=(5, 8)) for _ in range(4)]
        sums.append(np.abs(gate_weights(hs, Tensor(rng.normal(size=(4, 8)))).data.sum(axis=-1) - 1).max())
        g = random_graph(rng, 7, 3)
        _, alpha = gat_layer(g, Tensor(rng.normal(size=(7, 3))), Tensor(rng.normal(size=(2, 3, 4))),
                             Tensor(rng.normal(size=(2, 8))))
        sums.append(np.abs(alpha.data.sum(axis=-1) - 1).max())
    norm_err = float(max(sums))

    wave_err = 0.0
    for levels in (1, 2, 3, 4, 5):
        x = rng.normal(size=2 ** levels * 3)
        bands = dwt_haar(x, levels)
        wave_err = max(wave_err, np.abs(idwt_haar(bands) - x).max(),
                       abs(bands.energy() - np.sum(x ** 2)) / np.sum(x ** 2))

    leaks = []
    cfg = tiny_config()
    attn = {f"a.{n}": Tensor(rng.normal(size=(8, 8))) for n in ("wq", "wk", "wv", "wo")}
    x = rng.normal(size=(12, 8))
    y = x.copy()
    y[7:] += rng.normal(size=(5, 8))
    mask = causal_mask(12)
    leaks.append(np.abs(multi_head_attention(x, x, attn, "a", 2, mask).data[:7]
                        - multi_head_attention(y, y, attn, "a", 2, mask).data[:7]).max())
    fp = init_fusion(rng, cfg)
    leaks.append(np.abs(trunk_forward(x, fp, 1, 2).data[:7] - trunk_forward(y, fp, 1, 2).data[:7]).max())
    ep = init_event(rng, cfg)
    base = (EventNode("a", "t", 3, (0.1, 0.2, 0.3)), EventNode("b", "t", 9, (0.3, 0.2, 0.1)))
    extra = base + (EventNode("c", "t", 15, (4.0, 4.0, 4.0)),)
    g1 = EventGraph(base, (("a", "b", "related"),))
    g2 = EventGraph(extra, (("a", "b", "related"), ("c", "a", "related"), ("c", "b", "related")))
    days = np.arange(0, 15)
    leaks.append(np.abs(event2vec(g1, days, ep, np.zeros(2, int)).data
                        - event2vec(g2, days, ep, np.zeros(3, int)).data).max())
    leak = float(max(leaks))
    detail["text"] = f"normalisation {norm_err:.1e}, wavelet {wave_err:.1e}, leakage {leak}"
    assert norm_err <= 1e-12
    assert wave_err <= 1e-10
    assert leak == 0.0


# -- 4 ----------------------------------------------------------------------

@pytest.mark.criterion(4, "planted-signal learning beats persistence by 20%")
def test_planted_signal_learning(detail):
    t0 = time.perf_counter()
    ds = generate(GenSpec(seed=0, n_symbols=8, n_days=1000))
    result = train(desk_config(seed=0), ds)
    rep = evaluate(result.model, "test")
    seconds = time.perf_counter() - t0
    detail["text"] = (f"test rmse {rep.rmse:.5f} vs persistence {rep.persistence_rmse:.5f}, "
                      f"improvement {rep.improvement:.1%}, {seconds:.0f}s")
    assert rep.improvement >= 0.20
    assert seconds < 600


# -- 5 and 6 -------------------------------------------------------------------

@pytest.fixture(scope="module")
def event_runs():
    runs = []
    for seed in SEEDS:
        ds = generate(GenSpec(seed=seed, **EVENT_SPEC))
        cfg = desk_config(seed=seed, **PLANT_RUN)
        full = train(cfg, ds)
        no_event = train(cfg, ds, drop=("E",))
        runs.append({"full": full.model, "full_rmse": evaluate(full.model).rmse,
                     "ablated_rmse": evaluate(no_event.model).rmse})
    return runs


@pytest.fixture(scope="module")
def text_runs():
    runs = []
    for seed in SEEDS:
        ds = generate(GenSpec(seed=seed, **TEXT_SPEC))
        cfg = desk_config(seed=seed, **PLANT_RUN)
        runs.append({"full_rmse": evaluate(train(cfg, ds).model).rmse,
                     "ablated_rmse": evaluate(train(cfg, ds, drop=("F",)).model).rmse})
    return runs


@pytest.mark.criterion(5, "ablation direction for the event and text channels")
def test_ablation_direction(event_runs, text_runs, detail):
    event_worse = [r["ablated_rmse"] > r["full_rmse"] for r in event_runs]
    text_worse = [r["ablated_rmse"] > r["full_rmse"] for r in text_runs]
    detail["text"] = f"without events worse in {sum(event_worse)}/5, without text worse in {sum(text_worse)}/5"
    assert majority(event_worse)
    assert majority(text_worse)


@pytest.mark.criterion(6, "impact coefficients recover planted signs and ordering")
def test_impact_recovery(event_runs, detail):
    tables = [impact_table(r["full"], horizon=63)["types"] for r in event_runs]
    boom_pos = [t["boom"]["coefficient"] > 0 for t in tables]
    bust_neg = [t["bust"]["coefficient"] < 0 for t in tables]
    ordered = [abs(t["boom"]["coefficient"]) > abs(t["ripple"]["coefficient"]) for t in tables]
    detail["text"] = (f"positive sign {sum(boom_pos)}/5, negative sign {sum(bust_neg)}/5, "
                      f"strong above weak {sum(ordered)}/5")
    assert majority(boom_pos)
    assert majority(bust_neg)
    assert majority(ordered)


# -- 7 ----------------------------------------------------------------------

@pytest.mark.criterion(7, "determinism and persistence")
def test_determinism_and_persistence(tmp_path, detail):
    ds = generate(GenSpec(seed=9, n_symbols=3, n_days=300))
    save_dataset(ds, tmp_path / "data")
    loaded = load_dataset(tmp_path / "data")
    assert loaded.equals(ds)

    blobs, reports = [], []
    for run in ("a", "b"):
        ckpt = tmp_path / run / "checkpoint.mmft"
        ckpt.parent.mkdir()
        cfg = desk_config(seed=4, epochs=3, d_model=16, checkpoint=str(ckpt))
        res = train(cfg, loaded)
        blobs.append(ckpt.read_bytes())
        reports.append(json.dumps(evaluate(res.model, "test").to_dict(), sort_keys=True))
    assert blobs[0] == blobs[1]
    assert reports[0] == reports[1]

    fresh = MMFTModel(cfg, ModelParams.load(ckpt), FeatureStore(load_dataset(tmp_path / "data"), cfg))
    before, after = json.loads(reports[1]), evaluate(fresh, "test").to_dict()
    drift = max(abs(before[k] - after[k]) for k in ("rmse", "accuracy", "persistence_rmse"))
    if before["sharpe"] is not None:
        drift = max(drift, abs(before["sharpe"] - after["sharpe"]))
    detail["text"] = f"checkpoints identical, metrics identical, reload drift {drift:.1e}"
    assert drift <= 1e-12


# -- 8 ----------------------------------------------------------------------

@pytest.mark.criterion(8, "metric examples")
def test_metric_examples(detail):
    checks = {
        "rmse identical": rmse([0.3, -1.2], [0.3, -1.2]) == 0,
        "rmse unit": rmse([0, 0], [1, 1]) == 1,
        "rmse hand": rmse([1, 2], [3, 0]) == 2,
        "accuracy all": accuracy([0, 1, 2], [0, 1, 2]) == 1.0,
        "accuracy none": accuracy([0, 0, 0], [1, 2, 1]) == 0.0,
        "accuracy three of four": accuracy([0, 1, 2, 0], [0, 1, 2, 2]) == 0.75,
        "sharpe hand": abs(sharpe([0.01, 0.03, -0.01, 0.01])[0] - 0.6123724357) <= 1e-9,
        "sharpe scale": abs(sharpe(np.array([0.01, 0.03, -0.01, 0.01]) * 7)[0]
                            - sharpe([0.01, 0.03, -0.01, 0.01])[0]) <= 1e-9,
        "focal cross-entropy": abs(focal_loss(np.log([0.5, 0.25, 0.25]), np.array(0), 1.0, 0.0).item()
                                   - math.log(2)) <= 1e-9,
        "focal hand": abs(focal_loss(np.log([0.9, 0.05, 0.05]), np.array(0)).item()
                          - 0.25 * 0.01 * -math.log(0.9)) <= 1e-9,
        "focal limit": focal_loss(np.array([40.0, 0.0, 0.0]), np.array(0)).item() <= 1e-30,
    }
    try:
        sharpe([0.02] * 5)
        checks["sharpe constant"] = False
    except UndefinedMetricError:
        checks["sharpe constant"] = True
    failed = [k for k, ok in checks.items() if not ok]
    detail["text"] = f"{len(checks) - len(failed)}/{len(checks)} examples"
    assert not failed, failed
