"""Graph teacher: relation-aware message passing over sampled subgraphs,
user-specific gating, attention readout, and soft-label prediction.

Message passing (per layer, per node): m = sum over sampled children of
(h_child + h_relation) / (2 * deg) — the mean over the multiset holding both
the neighbor and relation embeddings — followed by
h' = relu(concat(m, h) @ W + b). Nodes without sampled children use m = 0.
A gate sigma(H_x W1 + W2 H_u^T) modulates each sequence position by the user
representation, additive attention pools positions into one row r, and
soft labels are softmax(r E_V^T) over the takeaway vocabulary with the padding
column pinned to probability zero.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .config import STREAM_INIT_TEACHER, rng_for
from .errors import ConfigError, InvalidSampleError
from .graph import Stkg, Subgraph
from .instrument import Counters, default_counters
from .optim import Adam
from .tensor import Tensor


class TeacherParams:
    """All trainable teacher arrays, keyed for the optimizer."""

    def __init__(self, n_entities: int, n_relations: int, n: int, d: int,
                 gnn_layers: int = 2, seed: int = 0,
                 n_users: int = 0, n_takeaways: int = 0):
        if d < 1 or n < 1 or gnn_layers < 1:
            raise ConfigError(f"bad teacher dimensions d={d} n={n} "
                              f"layers={gnn_layers}")
        rng = rng_for(seed, STREAM_INIT_TEACHER)

        def init(*shape):
            w = rng.normal(0.0, 0.02, size=shape)
            return Tensor(np.clip(w, -0.04, 0.04), requires_grad=True)

        self.n = n
        self.d = d
        self.gnn_layers = gnn_layers
        self.n_users = n_users
        self.n_takeaways = n_takeaways
        self.n_entities = n_entities
        self.n_relations = n_relations
        self.seed = seed
        self.entity_emb = init(max(n_entities, 1), d)
        self.relation_emb = init(max(n_relations, 1), d)
        self.combine_W = [init(2 * d, d) for _ in range(gnn_layers)]
        self.combine_b = [Tensor(np.zeros(d), requires_grad=True)
                          for _ in range(gnn_layers)]
        self.gate_W1 = init(d, 1)
        self.gate_W2 = init(n, d)
        self.att_W = init(d, d)
        self.att_w = init(d, 1)

    def as_dict(self) -> dict[str, Tensor]:
        out = {"entity_emb": self.entity_emb, "relation_emb": self.relation_emb,
               "gate_W1": self.gate_W1, "gate_W2": self.gate_W2,
               "att_W": self.att_W, "att_w": self.att_w}
        for l in range(self.gnn_layers):
            out[f"combine_W{l}"] = self.combine_W[l]
            out[f"combine_b{l}"] = self.combine_b[l]
        return out

    def item_rows(self) -> T.Tensor:
        """E_V: the takeaway block of the entity table, shape (|V|, d)."""
        return T.rows(self.entity_emb,
                      self.n_users, self.n_users + self.n_takeaways)

    def build_config(self) -> dict:
        """Constructor kwargs needed to rebuild an identically-shaped model."""
        return {"n_entities": self.n_entities, "n_relations": self.n_relations,
                "n": self.n, "d": self.d, "gnn_layers": self.gnn_layers,
                "seed": self.seed, "n_users": self.n_users,
                "n_takeaways": self.n_takeaways}


def _union_batch(subgraphs: list[Subgraph]):
    """Concatenate per-sample subgraphs into one disjoint node/edge set."""
    offsets = np.zeros(len(subgraphs), dtype=np.int64)
    total = 0
    for i, sg in enumerate(subgraphs):
        offsets[i] = total
        total += sg.n_nodes
    nodes = np.concatenate([sg.nodes for sg in subgraphs])
    edge_list = []
    for sg, off in zip(subgraphs, offsets):
        if sg.edges.shape[0]:
            e = sg.edges.copy()
            e[:, 0] += off
            e[:, 2] += off
            edge_list.append(e)
    edges = (np.concatenate(edge_list, axis=0) if edge_list
             else np.zeros((0, 3), dtype=np.int64))
    centers = np.stack([np.where(sg.centers >= 0, sg.centers + off, -1)
                        for sg, off in zip(subgraphs, offsets)])
    users = np.array([sg.user_index + off
                      for sg, off in zip(subgraphs, offsets)], dtype=np.int64)
    return nodes, edges, centers, users, total


def gnn_forward(subgraphs: list[Subgraph], params: TeacherParams,
                counters: Counters | None = None):
    """Run message passing; returns (H_x (b,n,d), H_u (b,d), pad mask (b,n))."""
    counters = counters if counters is not None else default_counters()
    counters.bump("teacher_forwards")
    nodes, edges, centers, users, n_total = _union_batch(subgraphs)

    h = T.take_rows(params.entity_emb, nodes)
    parents = edges[:, 0]
    # 2 * degree: the aggregation averages over both neighbor and relation
    # embeddings of each sampled edge
    denom = np.ones((n_total, 1))
    if edges.shape[0]:
        counts = np.bincount(parents, minlength=n_total)
        denom = np.maximum(2.0 * counts, 1.0).reshape(-1, 1)

    for l in range(params.gnn_layers):
        if edges.shape[0]:
            child_h = T.take_rows(h, edges[:, 2])
            rel_h = T.take_rows(params.relation_emb, edges[:, 1])
            summed = T.segment_sum(child_h + rel_h, parents, n_total)
            m = T.div(summed, Tensor(denom))
        else:
            m = Tensor(np.zeros((n_total, params.d)))
        h = T.relu(T.concat([m, h], axis=1) @ params.combine_W[l]
                   + params.combine_b[l])

    real = centers >= 0
    safe = np.where(real, centers, 0)
    H_x = T.take_rows(h, safe) * Tensor(real[:, :, None].astype(h.data.dtype))
    H_u = T.take_rows(h, users)
    return H_x, H_u, real


def user_gate(H_x: Tensor, H_u: Tensor, params: TeacherParams) -> Tensor:
    """H'_x = H_x * sigma(H_x W1 + W2 H_u^T), the n x 1 gate broadcast over d."""
    if H_x.data.shape[-1] != params.d or H_u.data.shape[-1] != params.d:
        raise ConfigError(f"gate dimension mismatch: {H_x.data.shape} / "
                          f"{H_u.data.shape} vs d={params.d}")
    if H_x.data.shape[-2] != params.gate_W2.data.shape[0]:
        raise ConfigError(
            f"gate is tied to sequence length {params.gate_W2.data.shape[0]}, "
            f"got {H_x.data.shape[-2]} positions")
    col = H_x @ params.gate_W1                      # (b, n, 1)
    user_term = H_u @ T.swapaxes(params.gate_W2, 0, 1)   # (b, n)
    gate = T.sigmoid(col + T.reshape(user_term, user_term.data.shape + (1,)))
    return H_x * gate


def attention_readout(H_gated: Tensor, params: TeacherParams,
                      pad_mask: np.ndarray) -> tuple[Tensor, Tensor]:
    """Additive-attention pooling over real positions.

    Returns (r (b, d), attention weights (b, n)).  Raises InvalidSampleError
    if any sample has no real position.
    """
    real = np.asarray(pad_mask, dtype=bool)
    if np.any(~real.any(axis=-1)):
        bad = int(np.flatnonzero(~real.any(axis=-1))[0])
        raise InvalidSampleError(f"sample {bad} has no non-pad position")
    scores = T.tanh(H_gated @ params.att_W) @ params.att_w   # (b, n, 1)
    scores = T.reshape(scores, scores.data.shape[:-1])       # (b, n)
    att = T.masked_softmax(scores, real)
    r = T.tsum(T.reshape(att, att.data.shape + (1,)) * H_gated, axis=1)  # (b, d)
    return r, att


def soft_labels(H_gated: Tensor, params: TeacherParams,
                pad_mask: np.ndarray) -> tuple[Tensor, Tensor]:
    """Attention-pool positions and score the takeaway vocabulary.

    Returns (probs (b, |V|+1) with column 0 exactly 0, attention (b, n)).
    Raises InvalidSampleError if any sample has no real position.
    """
    r, att = attention_readout(H_gated, params, pad_mask)
    logits = r @ T.swapaxes(params.item_rows(), 0, 1)        # (b, |V|)
    b = logits.data.shape[0]
    full = T.concat([Tensor(np.zeros((b, 1))), logits], axis=1)
    valid = np.ones((b, params.n_takeaways + 1), dtype=bool)
    valid[:, 0] = False
    probs = T.masked_softmax(full, valid)
    return probs, att


def teacher_readout(subgraphs: list[Subgraph], params: TeacherParams,
                    counters: Counters | None = None) -> Tensor:
    """Pooled graph representation r (b, d) for feature-fusion strategies."""
    H_x, H_u, real = gnn_forward(subgraphs, params, counters)
    H_gated = user_gate(H_x, H_u, params)
    r, _ = attention_readout(H_gated, params, real)
    return r


def teacher_forward(subgraphs: list[Subgraph], params: TeacherParams,
                    counters: Counters | None = None):
    """Full pipeline; returns (probs (b, |V|+1), logits-for-kd (b, |V|+1))."""
    H_x, H_u, real = gnn_forward(subgraphs, params, counters)
    H_gated = user_gate(H_x, H_u, params)
    probs, _ = soft_labels(H_gated, params, real)
    return probs


def pretrain_step(subgraphs: list[Subgraph], targets: np.ndarray,
                  params: TeacherParams, opt: Adam,
                  counters: Counters | None = None) -> float:
    """One optimization step of mean cross-entropy against one-hot targets."""
    targets = np.asarray(targets)
    if np.any(targets == 0):
        raise InvalidSampleError("pretraining target is the padding id 0")
    probs = teacher_forward(subgraphs, params, counters)
    loss = T.batch_cross_entropy(probs, targets)
    opt.zero_grad()
    loss.backward()
    opt.step()
    return float(loss.data)


def teacher_optimizer(params: TeacherParams, lr: float = 0.001,
                      beta1: float = 0.9, beta2: float = 0.98) -> Adam:
    return Adam(params.as_dict(), lr=lr, beta1=beta1, beta2=beta2)
