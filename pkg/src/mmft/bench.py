"""Forward-pass timings of the convolution, attention and graph layers."""

from __future__ import annotations

import csv
import io
import time

import numpy as np

from mmft.encoders import causal_mask, dilated_conv, gat_attention, multi_head_attention
from mmft.errors import InputError
from mmft.numerics import Tensor, no_grad

COLUMNS = ("length", "tcn_ms", "attention_ms", "gat_ms")


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def bench(sizes, d_model: int = 32, repeats: int = 3, seed: int = 0) -> list[dict]:
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise InputError("bench needs at least one input size")
    if any(s < 1 for s in sizes):
        raise InputError("bench sizes must be positive")
    rng = np.random.default_rng(seed)
    d = d_model
    conv_w = [Tensor(rng.normal(size=(2, d, d)) * 0.1) for _ in range(4)]
    attn = {f"a.{n}": Tensor(rng.normal(size=(d, d)) * 0.1) for n in ("wq", "wk", "wv", "wo")}
    W, a = Tensor(rng.normal(size=(2, d, d)) * 0.1), Tensor(rng.normal(size=(2, 2 * d)) * 0.1)
    rows = []
    with no_grad():
        for n in sizes:
            x = Tensor(rng.normal(size=(n, d)))
            mask = causal_mask(n)
            adj = (rng.random((n, n)) < min(1.0, 8.0 / n)) | np.eye(n, dtype=bool)

            def tcn():
                h = x
                for k, w in enumerate(conv_w):
                    h = dilated_conv(h, w, 2 ** k)
                return h

            rows.append({
                "length": n,
                "tcn_ms": _best_of(tcn, repeats),
                "attention_ms": _best_of(lambda: multi_head_attention(x, x, attn, "a", 2, mask), repeats),
                "gat_ms": _best_of(lambda: gat_attention(x, adj, W, a), repeats),
            })
    return rows


def to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{r[k]:.4f}" if isinstance(r[k], float) else r[k]) for k in COLUMNS})
    return buf.getvalue()
