"""Named finite-difference gradient suites for every differentiable piece.

Each suite draws ``instances`` random problems and returns one
:class:`GradCheckReport` per problem. Scopes select suites by exact name or
by dotted prefix (``"encoders"`` runs every ``encoders.*`` suite).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from mmft import numerics as nx
from mmft.config import RunConfig
from mmft.encoders import (
    EventGraph,
    EventNode,
    cross_attention,
    dilated_conv,
    encode_macro,
    encode_technical,
    encode_text,
    event2vec,
    gat_layer,
    haar_approx,
    init_event,
    init_macro,
    init_technical,
    init_text,
    mf_lstm_step,
    multi_head_attention,
)
from mmft.errors import InputError
from mmft.fusion import fuse, gate_weights, init_fusion, pos_enc, predict, trunk_forward
from mmft.numerics import GradCheckReport, Tensor, grad_check
from mmft.timebase import EventTimeline, TimelineEvent, calendar_from_start
from mmft.training.losses import LossWeights, focal_loss, l2_loss, total_loss

STEP = 1e-5
TOL = 1e-4
PROBES = 6  # entries probed per tensor in the larger suites

SuiteFn = Callable[[np.random.Generator, int], list]
SUITES: dict[str, SuiteFn] = {}


def register(name: str):
    def deco(fn: SuiteFn) -> SuiteFn:
        SUITES[name] = fn
        return fn
    return deco


def tiny_config(**changes) -> RunConfig:
    base = dict(d_model=8, heads=2, layers=1, wavelet_levels=2, lookback=8, tech_channels=4,
                vocab_size=32, max_tokens=5, text_heads=2, macro_lookback=4, macro_hidden=4,
                gat_hidden=4, gat_heads=2, event_feature_dim=3, max_event_types=4)
    base.update(changes)
    return RunConfig(**base)


def _leaf(a) -> Tensor:
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=True)


def _away_from_zero(rng, shape, margin=0.05):
    """Normal draws pushed off the kinks of relu-like functions."""
    x = rng.normal(size=shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-12) * margin, x)


def _check(f, xs, rng, max_elements=None) -> GradCheckReport:
    return grad_check(f, xs, step=STEP, tol=TOL, max_elements=max_elements, rng=rng)


def _weighted(rng):
    """Random fixed projection so the scalar test loss exercises every output entry.

    The weights are drawn on first use, sized to the output.
    """
    seed = int(rng.integers(2 ** 32))
    cache = {}

    def project(out):
        if "r" not in cache:
            cache["r"] = np.random.default_rng(seed).normal(size=out.shape)
        return (out * cache["r"]).sum()
    return project


# -- elementwise and reduction operations -----------------------------------

def _unary(name, fn, domain=None):
    def suite(rng, n):
        out = []
        for _ in range(n):
            shape = tuple(rng.integers(1, 5, size=2))
            x = _away_from_zero(rng, shape) if domain is None else domain(rng, shape)
            w = _weighted(rng)
            out.append(_check(lambda a: w(fn(a)), [_leaf(x)], rng))
        return out
    register(f"numerics.{name}")(suite)


def _positive(rng, shape):
    return rng.uniform(0.2, 3.0, size=shape)


_unary("neg", lambda a: -a)
_unary("exp", nx.exp)
_unary("log", nx.log, _positive)
_unary("sqrt", nx.sqrt, _positive)
_unary("power", lambda a: nx.power(a, 2.5), _positive)
_unary("tanh", nx.tanh)
_unary("sigmoid", nx.sigmoid)
_unary("relu", nx.relu)
_unary("leaky_relu", nx.leaky_relu)
_unary("elu", nx.elu)
_unary("sum", lambda a: nx.tsum(a, axis=0) * nx.tsum(a, axis=0))
_unary("mean", lambda a: nx.mean(a, axis=-1, keepdims=True) * a)
_unary("max", lambda a: nx.tmax(a, axis=-1) * 1.0)
_unary("reshape", lambda a: nx.reshape(a, (-1,)) * nx.reshape(a, (-1,)))
_unary("transpose", lambda a: nx.transpose(a) @ a)
_unary("getitem", lambda a: a[..., ::2] * a[..., ::2])
_unary("index", lambda a: nx.index(a, (Ellipsis, np.array([0, 0, -1]))))
_unary("pad_left", lambda a: nx.pad_left(a, 2, axis=-1) * 1.5)
_unary("softmax", lambda a: nx.softmax(a, axis=-1))
_unary("log_softmax", lambda a: nx.log_softmax(a, axis=-1))


def _binary(name, fn, b_domain=None):
    def suite(rng, n):
        out = []
        for _ in range(n):
            shape = tuple(rng.integers(1, 5, size=2))
            a = rng.normal(size=shape)
            b_shape = shape if rng.random() < 0.5 else (1, shape[1])  # also probe broadcasting
            b = rng.normal(size=b_shape) if b_domain is None else b_domain(rng, b_shape)
            w = _weighted(rng)
            out.append(_check(lambda x, y: w(fn(x, y)), [_leaf(a), _leaf(b)], rng))
        return out
    register(f"numerics.{name}")(suite)


_binary("add", nx.add)
_binary("sub", nx.sub)
_binary("mul", nx.mul)
_binary("div", nx.div, _positive)


@register("numerics.where")
def _where(rng, n):
    out = []
    for _ in range(n):
        shape = (3, 4)
        cond = rng.random(shape) < 0.5
        w = _weighted(rng)
        out.append(_check(lambda a, b: w(nx.where(cond, a, b)),
                          [_leaf(rng.normal(size=shape)), _leaf(rng.normal(size=shape))], rng))
    return out


@register("numerics.concat")
def _concat(rng, n):
    out = []
    for _ in range(n):
        a, b = rng.normal(size=(2, 3)), rng.normal(size=(2, int(rng.integers(1, 4))))
        w = _weighted(rng)
        out.append(_check(lambda x, y: w(nx.concat([x, y], axis=-1)), [_leaf(a), _leaf(b)], rng))
    return out


@register("numerics.stack")
def _stack(rng, n):
    out = []
    for _ in range(n):
        a, b = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
        w = _weighted(rng)
        out.append(_check(lambda x, y: w(nx.stack([x, y], axis=1)), [_leaf(a), _leaf(b)], rng))
    return out


@register("numerics.matmul")
def _matmul(rng, n):
    out = []
    for _ in range(n):
        m, k, p = (int(v) for v in rng.integers(1, 5, size=3))
        lead = (2,) if rng.random() < 0.5 else ()
        a, b = rng.normal(size=lead + (m, k)), rng.normal(size=(k, p))
        w = _weighted(rng)
        out.append(_check(lambda x, y: w(x @ y), [_leaf(a), _leaf(b)], rng))
    return out


@register("numerics.masked_softmax")
def _masked_softmax(rng, n):
    out = []
    for _ in range(n):
        x = rng.normal(size=(3, 5))
        mask = rng.random((3, 5)) < 0.6
        mask[:, 0] = True
        w = _weighted(rng)
        out.append(_check(lambda a: w(nx.softmax(a, axis=-1, mask=mask)), [_leaf(x)], rng))
    return out


@register("numerics.layer_norm")
def _layer_norm(rng, n):
    out = []
    for _ in range(n):
        x = rng.normal(size=(3, 6))
        w = _weighted(rng)
        out.append(_check(lambda a, g, b: w(nx.layer_norm(a, g, b)),
                          [_leaf(x), _leaf(rng.normal(size=6)), _leaf(rng.normal(size=6))], rng))
    return out


# -- encoders -----------------------------------------------------------------

def _params_check(rng, f, params: dict, names, extra=(), max_elements=PROBES):
    tensors = list(extra) + [params[n] for n in names]
    k = len(extra)

    def call(*xs):
        for name, t in zip(names, xs[k:]):
            params[name] = t
        return f(*xs[:k])

    return _check(call, tensors, rng, max_elements)


@register("encoders.wavelet")
def _wavelet(rng, n):
    out = []
    for _ in range(n):
        level = int(rng.integers(1, 4))
        x = rng.normal(size=(2, 2 ** level * 2, 3))
        w = _weighted(rng)
        out.append(_check(lambda a: w(haar_approx(a, level, axis=-2)), [_leaf(x)], rng))
    return out


@register("encoders.conv")
def _conv(rng, n):
    out = []
    for _ in range(n):
        d = int(rng.integers(1, 4))
        x, wt, b = rng.normal(size=(2, 8, 3)), rng.normal(size=(2, 3, 4)), rng.normal(size=4)
        w = _weighted(rng)
        out.append(_check(lambda a, k, c: w(dilated_conv(a, k, d, c)),
                          [_leaf(x), _leaf(wt), _leaf(b)], rng))
    return out


@register("encoders.attention")
def _attention(rng, n):
    out = []
    for _ in range(n):
        q, k, v = rng.normal(size=(2, 3, 4)), rng.normal(size=(2, 5, 4)), rng.normal(size=(2, 5, 4))
        mask = rng.random((2, 3, 5)) < 0.7
        mask[..., 0] = True
        w = _weighted(rng)
        out.append(_check(lambda a, b, c: w(cross_attention(a, b, c, mask)),
                          [_leaf(q), _leaf(k), _leaf(v)], rng))
    return out


@register("encoders.multihead")
def _multihead(rng, n):
    out = []
    for _ in range(n):
        d = 8
        p = {f"mh.{m}": _leaf(rng.normal(size=(d, d)) * 0.3) for m in ("wq", "wk", "wv", "wo")}
        x = _leaf(rng.normal(size=(2, 4, d)))
        w = _weighted(rng)
        mask = np.tril(np.ones((4, 4), dtype=bool))
        out.append(_params_check(rng, lambda a: w(multi_head_attention(a, a, p, "mh", 2, mask)),
                                 p, sorted(p), extra=[x]))
    return out


@register("encoders.technical")
def _technical(rng, n):
    cfg = tiny_config()
    out = []
    for _ in range(n):
        p = init_technical(rng, cfg)
        x = _leaf(rng.normal(size=(2, cfg.lookback, 5)))
        w = _weighted(rng)
        out.append(_params_check(rng, lambda a: w(encode_technical(a, p, cfg.wavelet_levels)),
                                 p, sorted(p), extra=[x]))
    return out


@register("encoders.text")
def _text(rng, n):
    cfg = tiny_config()
    out = []
    for _ in range(n):
        p = init_text(rng, cfg)
        tokens = rng.integers(0, cfg.vocab_size, size=(2, cfg.max_tokens))
        mask = np.ones(tokens.shape, dtype=bool)
        mask[1, 3:] = False
        q = _leaf(rng.normal(size=(2, cfg.d_model)))
        w = _weighted(rng)
        out.append(_params_check(rng, lambda a: w(encode_text(tokens, a, p, cfg.text_heads, mask)),
                                 p, sorted(p), extra=[q]))
    return out


@register("encoders.macro")
def _macro(rng, n):
    cfg = tiny_config()
    out = []
    for _ in range(n):
        p = init_macro(rng, cfg, 2)
        x = _leaf(rng.normal(size=(3, cfg.macro_lookback, 2)))
        stale = rng.integers(0, 60, size=(3, cfg.macro_lookback, 2)).astype(float)
        w = _weighted(rng)
        out.append(_params_check(rng, lambda a: w(encode_macro(a, p, stale, 0.05)), p, sorted(p), extra=[x]))
    return out


@register("encoders.lstm_step")
def _lstm_step(rng, n):
    cfg = tiny_config()
    out = []
    for _ in range(n):
        p = init_macro(rng, cfg, 3)
        x, c, h = (_leaf(rng.normal(size=(2, s))) for s in (3, cfg.macro_hidden, cfg.macro_hidden))
        wc, wh = _weighted(rng), _weighted(rng)

        def f(a, cc, hh):
            c2, h2 = mf_lstm_step(a, (cc, hh), p)
            return wc(c2) + wh(h2)
        out.append(_params_check(rng, f, p, ["macro.lstm.b", "macro.lstm.wh", "macro.lstm.wx"], extra=[x, c, h]))
    return out


def random_graph(rng, n_nodes: int, feat_dim: int, n_types: int = 3) -> EventGraph:
    nodes = tuple(EventNode(f"n{i}", f"type{int(rng.integers(n_types))}", int(rng.integers(0, 20)),
                            tuple(rng.normal(size=feat_dim))) for i in range(n_nodes))
    edges = tuple((f"n{i}", f"n{j}", "related") for i in range(n_nodes) for j in range(n_nodes)
                  if i != j and rng.random() < 0.4)
    return EventGraph(nodes, edges)


@register("encoders.gat")
def _gat(rng, n):
    out = []
    for _ in range(n):
        g = random_graph(rng, 5, 3)
        h = _leaf(rng.normal(size=(5, 4)))
        W, a = _leaf(rng.normal(size=(2, 4, 3)) * 0.5), _leaf(rng.normal(size=(2, 6)) * 0.5)
        concat = bool(rng.random() < 0.5)
        w = _weighted(rng)
        out.append(_check(lambda x, ww, aa: w(gat_layer(g, x, ww, aa, concat)[0]), [h, W, a], rng))
    return out


@register("encoders.event2vec")
def _event2vec(rng, n):
    cfg = tiny_config()
    out = []
    for _ in range(n):
        g = random_graph(rng, 5, cfg.event_feature_dim)
        types = np.array([int(t[-1]) for t in (node.type for node in g.nodes)])
        p = init_event(rng, cfg)
        days = np.array([5, 12, 19, 25])
        w = _weighted(rng)
        out.append(_params_check(rng, lambda: w(event2vec(g, days, p, types)), p, sorted(p)))
    return out


# -- fusion -------------------------------------------------------------------

@register("fusion.gate")
def _gate(rng, n):
    out = []
    for _ in range(n):
        hs = [_leaf(rng.normal(size=(3, 6))) for _ in range(4)]
        gw = _leaf(rng.normal(size=(4, 6)))
        active = np.ones(4, dtype=bool)
        active[int(rng.integers(4))] = rng.random() < 0.5
        w = _weighted(rng)

        def f(a, b, c, d, g):
            alpha = gate_weights([a, b, c, d], g, active)
            return w(fuse([a, b, c, d], alpha))
        out.append(_check(f, hs + [gw], rng))
    return out


@register("fusion.posenc")
def _posenc(rng, n):
    cfg = tiny_config()
    cal = calendar_from_start("2020-01-06", 60)
    out = []
    for _ in range(n):
        evs = tuple(TimelineEvent(int(t), f"e{i}", "x") for i, t in enumerate(rng.integers(0, 50, size=3)))
        tl = EventTimeline(evs)
        p = init_fusion(rng, cfg)
        p["posenc.gamma"] = _leaf(rng.normal(size=3))
        days = np.sort(rng.choice(60, size=6, replace=False))
        w = _weighted(rng)
        out.append(_params_check(rng, lambda: w(pos_enc(days, tl, p, cal, cfg.sigma)), p,
                                 ["posenc.gamma", "posenc.log_lambda"]))
    return out


@register("fusion.trunk")
def _trunk(rng, n):
    cfg = tiny_config()
    out = []
    for _ in range(n):
        p = init_fusion(rng, cfg)
        x = _leaf(rng.normal(size=(2, 4, cfg.d_model)))
        wy, wc = _weighted(rng), _weighted(rng)

        def f(a):
            pr = predict(trunk_forward(a, p, cfg.layers, cfg.heads), p)
            return wy(pr.y_hat) + wc(pr.class_logits)
        names = [k for k in sorted(p) if k.startswith(("trunk.", "head."))]
        out.append(_params_check(rng, f, p, names, extra=[x]))
    return out


# -- training losses ----------------------------------------------------------------

@register("training.l2")
def _l2(rng, n):
    return [_check(lambda a: l2_loss(a, t), [_leaf(rng.normal(size=7))], rng)
            for t in (rng.normal(size=7) for _ in range(n))]


@register("training.focal")
def _focal(rng, n):
    out = []
    for _ in range(n):
        labels = rng.integers(0, 3, size=5)
        gamma = float(rng.choice([0.0, 1.0, 2.0]))
        out.append(_check(lambda z: focal_loss(z, labels, 0.25, gamma), [_leaf(rng.normal(size=(5, 3)))], rng))
    return out


@register("training.total_loss")
def _total(rng, n):
    """End-to-end: technical encoder, gated fusion, trunk and both heads on a 4-sample batch."""
    cfg = tiny_config()
    out = []
    for _ in range(n):
        p = init_technical(rng, cfg)
        p.update(init_fusion(rng, cfg))
        wins = rng.normal(size=(4, cfg.lookback, 5))
        others = [rng.normal(size=(4, cfg.d_model)) for _ in range(3)]
        y = rng.normal(size=4)
        labels = rng.integers(0, 3, size=4)
        lw = LossWeights(1.0, 1.0, 0.25, 2.0)

        def f():
            ht = encode_technical(wins, p, cfg.wavelet_levels)
            hs = [ht] + [Tensor(o) for o in others]
            fused = fuse(hs, gate_weights(hs, p["fusion.gate.w"])).reshape(4, 1, cfg.d_model)
            pr = predict(trunk_forward(fused, p, cfg.layers, cfg.heads), p)
            pr.y_hat, pr.class_logits = pr.y_hat.reshape(4), pr.class_logits.reshape(4, 3)
            return total_loss(pr, y, labels, lw)
        names = [k for k in sorted(p) if not k.startswith("posenc.") and k != "fusion.null"]
        out.append(_params_check(rng, f, p, names))
    return out


# -- runner -------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    passed: bool
    instances: int
    max_rel_error: float
    seconds: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def select(scope: str = "all") -> list[str]:
    if scope in ("all", "", None):
        return sorted(SUITES)
    names = sorted(n for n in SUITES if n == scope or n.startswith(scope + "."))
    if not names:
        raise InputError(f"no gradient suite matches scope {scope!r}")
    return names


def run_suites(scope: str = "all", instances: int = 10, seed: int = 0) -> list[SuiteResult]:
    results = []
    for name in select(scope):
        rng = np.random.default_rng([seed, sum(name.encode())])
        t0 = time.perf_counter()
        reports = SUITES[name](rng, instances)
        results.append(SuiteResult(
            name, all(r.passed for r in reports), len(reports),
            max((r.max_rel_error for r in reports), default=0.0), time.perf_counter() - t0))
    return results
