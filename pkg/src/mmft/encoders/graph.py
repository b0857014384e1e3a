"""Event knowledge graph, graph attention layers and the Event2Vec channel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmft.errors import DimensionError, InputError
from mmft.numerics import Tensor, elu, exp, leaky_relu, softmax, xavier_uniform
from mmft.timebase import EventTimeline, TimelineEvent, TradingCalendar, parse_date

SELF_RELATION = "self"


@dataclass(frozen=True)
class EventNode:
    id: str
    type: str
    ordinal: int
    features: tuple


@dataclass(frozen=True)
class EventGraph:
    """Typed, timestamped event nodes with directed relation edges.

    A self-loop is added to every node on construction, so each node has at
    least one neighbour to attend to.
    """

    nodes: tuple = ()
    edges: tuple = ()  # (src_id, dst_id, relation)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate event node id")
        known = set(ids)
        edges = []
        for src, dst, rel in self.edges:
            if src not in known or dst not in known:
                raise InputError(f"edge {src}->{dst} references an unknown node")
            edges.append((str(src), str(dst), str(rel)))
        looped = {s for s, d, r in edges if s == d and r == SELF_RELATION}
        edges += [(i, i, SELF_RELATION) for i in ids if i not in looped]
        dims = {len(n.features) for n in nodes}
        if len(dims) > 1:
            raise InputError("event nodes disagree on feature length")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def position(self, node_id: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.id == node_id:
                return i
        raise InputError(f"unknown event node {node_id!r}")

    def ordinals(self) -> np.ndarray:
        return np.array([n.ordinal for n in self.nodes], dtype=np.int64)

    def features(self, dim: int | None = None) -> np.ndarray:
        if not self.nodes:
            return np.zeros((0, dim or 0))
        f = np.array([n.features for n in self.nodes], dtype=np.float64).reshape(len(self.nodes), -1)
        if dim is not None and f.shape[1] != dim:
            raise DimensionError(f"event features have width {f.shape[1]}, model expects {dim}")
        return f

    def types(self) -> list[str]:
        return sorted({n.type for n in self.nodes})

    def adjacency(self) -> np.ndarray:
        """``adj[i, j]`` is True when node ``i`` attends to ``j`` (edge ``j -> i`` or ``i == j``)."""
        pos = {n.id: i for i, n in enumerate(self.nodes)}
        adj = np.zeros((len(self.nodes), len(self.nodes)), dtype=bool)
        for src, dst, _ in self.edges:
            adj[pos[dst], pos[src]] = True
        return adj

    def timeline(self) -> EventTimeline:
        return EventTimeline(tuple(TimelineEvent(n.ordinal, n.id, n.type) for n in self.nodes))

    # -- JSON schema: {"nodes": [{id,type,date,features}], "edges": [{src,dst,relation}]}
    def to_json(self, cal: TradingCalendar) -> dict:
        return {
            "nodes": [{"id": n.id, "type": n.type, "date": cal.day(n.ordinal).isoformat(),
                       "features": [float(v) for v in n.features]} for n in self.nodes],
            "edges": [{"src": s, "dst": d, "relation": r} for s, d, r in self.edges
                      if not (s == d and r == SELF_RELATION)],
        }

    @classmethod
    def from_json(cls, obj: dict, cal: TradingCalendar) -> "EventGraph":
        nodes = []
        for k, rec in enumerate(obj.get("nodes", [])):
            try:
                nodes.append(EventNode(str(rec["id"]), str(rec["type"]),
                                       cal.ordinal(parse_date(rec["date"])),
                                       tuple(float(v) for v in rec.get("features", []))))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"event node record {k}: {exc}") from exc
        edges = []
        for k, rec in enumerate(obj.get("edges", [])):
            try:
                edges.append((str(rec["src"]), str(rec["dst"]), str(rec.get("relation", "related"))))
            except (KeyError, TypeError) as exc:
                raise InputError(f"event edge record {k}: {exc}") from exc
        return cls(tuple(nodes), tuple(edges))


def init_event(rng: np.random.Generator, cfg) -> dict:
    hid, heads = cfg.gat_hidden, cfg.gat_heads
    return {
        "event.type_emb": xavier_uniform((cfg.max_event_types, hid), rng),
        "event.feat.w": xavier_uniform((cfg.event_feature_dim, hid), rng),
        "event.gat1.W": xavier_uniform((heads, hid, hid), rng),
        "event.gat1.a": xavier_uniform((heads, 2 * hid), rng),
        "event.gat2.W": xavier_uniform((heads, heads * hid, hid), rng),
        "event.gat2.a": xavier_uniform((heads, 2 * hid), rng),
        "event.proj.w": xavier_uniform((hid, cfg.d_model), rng),
        "event.log_lambda": Tensor(np.log(cfg.lambda_init), requires_grad=True),
    }


def gat_attention(h, mask, W, a, concat: bool = True, slope: float = 0.2):
    """Multi-head graph attention.

    ``h`` is ``[..., N, d]``; ``mask[..., i, j]`` admits neighbour ``j`` of ``i``;
    ``W`` is ``[H, d, d']`` and ``a`` is ``[H, 2d']`` (query half, then key half).
    Heads are ELU-activated and concatenated, or averaged then ELU-activated.
    Returns ``(h_out, alpha)`` with ``alpha`` of shape ``[..., H, N, N]``.
    """
    if h.shape[-1] != W.shape[1]:
        raise DimensionError(f"GAT input width {h.shape[-1]} vs weight {W.shape}")
    heads, _, dout = W.shape
    lead = h.shape[:-2]
    n = h.shape[-2]
    wh = h.reshape(lead + (1, n, h.shape[-1])) @ W           # [..., H, N, d']
    a_q = a[:, :dout].reshape(heads, dout, 1)
    a_k = a[:, dout:].reshape(heads, dout, 1)
    s_q = wh @ a_q                                              # [..., H, N, 1]
    s_k = wh @ a_k
    e = leaky_relu(s_q + s_k.swapaxes(-1, -2), slope)           # [..., H, N, N]
    m = np.asarray(mask, dtype=bool)
    m = m.reshape(m.shape[:-2] + (1,) + m.shape[-2:])
    alpha = softmax(e, axis=-1, mask=m)
    agg = alpha @ wh                                            # [..., H, N, d']
    if concat:
        out = elu(agg).swapaxes(-2, -3).reshape(agg.shape[:-3] + (n, heads * dout))
    else:
        out = elu(agg.mean(axis=-3))
    return out, alpha


def gat_layer(g, h, W, a, concat: bool = True):
    """Graph attention over the in-neighbours (plus self) of each node of ``g``.

    ``g`` is an :class:`EventGraph` or a precomputed boolean adjacency matrix.
    """
    adj = g.adjacency() if isinstance(g, EventGraph) else np.asarray(g, dtype=bool)
    return gat_attention(h, adj, W, a, concat)


def event2vec(g: EventGraph, days, params: dict, type_ids, exclude=(), return_alpha: bool = False):
    """Daily event-channel embedding from the events known on each day.

    Node states start from a type embedding plus a projection of the node
    features; two graph attention layers propagate them over the subgraph of
    events dated on or before the day. The day's embedding is the sum of node
    states weighted by ``exp(-lambda * (day - t_e))``, projected to ``d_model``
    without bias. Events dated after the day, and nodes listed in
    ``exclude``, have exactly zero influence.
    """
    days_arr = np.atleast_1d(np.asarray(days, dtype=np.int64))
    d_model = params["event.proj.w"].shape[1]
    scalar = np.ndim(days) == 0
    n = len(g)
    if n == 0:
        out = Tensor(np.zeros((days_arr.size, d_model)))
        return (out.reshape(d_model) if scalar else out) if not return_alpha else (out, [])
    type_ids = np.asarray(type_ids, dtype=np.int64)
    if type_ids.shape != (n,):
        raise DimensionError("one type id per node required")
    excluded = np.zeros(n, dtype=bool)
    for node_id in exclude:
        excluded[g.position(node_id)] = True

    t_e = g.ordinals()
    active = (t_e[None, :] <= days_arr[:, None]) & ~excluded[None, :]      # [D, N]
    patterns, inverse = np.unique(active, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    adj = g.adjacency()
    eye = np.eye(n, dtype=bool)
    masks = (adj[None] & patterns[:, None, :]) | eye[None]                 # [P, N, N]

    feats = Tensor(g.features(params["event.feat.w"].shape[0]))
    h0 = params["event.type_emb"][type_ids] + feats @ params["event.feat.w"]
    h1, a1 = gat_attention(h0, masks, params["event.gat1.W"], params["event.gat1.a"], concat=True)
    h2, a2 = gat_attention(h1, masks, params["event.gat2.W"], params["event.gat2.a"], concat=False)

    lam = exp(params["event.log_lambda"])
    age = np.where(active, days_arr[:, None] - t_e[None, :], 0).astype(np.float64)
    weights = exp(lam * Tensor(-age)) * active.astype(np.float64)           # [D, N]
    states = h2[inverse]                                                    # [D, N, hid]
    pooled = (weights.reshape(days_arr.size, 1, n) @ states).reshape(days_arr.size, -1)
    out = pooled @ params["event.proj.w"]
    if scalar:
        out = out.reshape(d_model)
    return (out, [a1, a2]) if return_alpha else out
