"""Toy financial-text channel: hashed tokens, one transformer block, cross-attention.

Token id 0 is the reserved null token for empty documents; padding positions
are excluded through a mask rather than by id.
"""

from __future__ import annotations

import hashlib

import numpy as np

from mmft.encoders.attention import cross_attention, multi_head_attention, sinusoid_positions
from mmft.errors import InputError
from mmft.numerics import Tensor, as_tensor, elu, layer_norm, ones, xavier_uniform, zeros

NULL_TOKEN = 0


def token_id(word: str, vocab_size: int) -> int:
    digest = hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest()
    return 1 + int.from_bytes(digest, "little") % (vocab_size - 1)


def tokenize(text: str, vocab_size: int, max_tokens: int) -> list[int]:
    """Lowercase whitespace split, 64-bit hash into ``[1, vocab_size)``."""
    ids = [token_id(w, vocab_size) for w in (text or "").lower().split()]
    return ids[:max_tokens] if ids else [NULL_TOKEN]


def pad_tokens(seqs, max_tokens: int):
    """Stack token lists into ``(ids [N, max_tokens], mask [N, max_tokens])``."""
    ids = np.zeros((len(seqs), max_tokens), dtype=np.int64)
    mask = np.zeros((len(seqs), max_tokens), dtype=bool)
    for i, s in enumerate(seqs):
        s = list(s)[:max_tokens] or [NULL_TOKEN]
        ids[i, :len(s)] = s
        mask[i, :len(s)] = True
    return ids, mask


def init_text(rng: np.random.Generator, cfg) -> dict:
    d = cfg.d_model
    h = cfg.ffn_mult * d
    p = {"text.emb": Tensor(rng.normal(0.0, 0.1, size=(cfg.vocab_size, d)), requires_grad=True)}
    for name in ("wq", "wk", "wv", "wo"):
        p[f"text.self.{name}"] = xavier_uniform((d, d), rng)
    p["text.ln1.g"], p["text.ln1.b"] = ones((d,)), zeros((d,))
    p["text.ln2.g"], p["text.ln2.b"] = ones((d,)), zeros((d,))
    p["text.ff1.w"], p["text.ff1.b"] = xavier_uniform((d, h), rng), zeros((h,))
    p["text.ff2.w"], p["text.ff2.b"] = xavier_uniform((h, d), rng), zeros((d,))
    for name in ("q", "k", "v", "out"):
        p[f"text.cross.{name}"] = xavier_uniform((d, d), rng)
    p["text.cross.b"] = zeros((d,))
    return p


def encode_text(tokens, stock_query, params: dict, heads: int, mask=None) -> Tensor:
    """Fuse a document with stock features; the stock vector is the single query.

    ``tokens`` is ``[T]`` or ``[B, T]`` integer ids, ``stock_query`` ``[d]`` or
    ``[B, d]``. Returns ``[d]`` or ``[B, d]``.
    """
    ids = np.asarray(tokens, dtype=np.int64)
    emb = params["text.emb"]
    vocab = emb.shape[0]
    if ids.size == 0:
        ids = np.array([NULL_TOKEN])
    if ids.min() < 0 or ids.max() >= vocab:
        raise InputError(f"token id outside [0, {vocab})")
    single = ids.ndim == 1
    q = as_tensor(stock_query)
    if single:
        ids = ids[None, :]
        q = q.reshape(1, -1)
        mask = None if mask is None else np.asarray(mask)[None, :]
    if mask is None:
        mask = np.ones(ids.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    b, t = ids.shape
    d = emb.shape[1]

    x = emb[ids] + sinusoid_positions(t, d)
    attn_mask = mask[:, None, None, :]
    hdn = layer_norm(x, params["text.ln1.g"], params["text.ln1.b"])
    x = x + multi_head_attention(hdn, hdn, params, "text.self", heads, mask=attn_mask)
    hdn = layer_norm(x, params["text.ln2.g"], params["text.ln2.b"])
    x = x + elu(hdn @ params["text.ff1.w"] + params["text.ff1.b"]) @ params["text.ff2.w"] + params["text.ff2.b"]

    query = (q @ params["text.cross.q"]).reshape(b, 1, d)
    fused = cross_attention(query, x @ params["text.cross.k"], x @ params["text.cross.v"],
                            mask=mask[:, None, :])
    out = fused.reshape(b, d) @ params["text.cross.out"] + params["text.cross.b"]
    return out.reshape(d) if single else out
