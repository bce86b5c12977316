"""Sequence student: spatially-enhanced embeddings, causal self-attention,
next-item prediction, and the distillation / supervised / joint losses.

The input embedding sums three parts: item embeddings, a learned spatial
position embedding E_SP = (region_emb[x_c] + dist_emb[x_f]) @ W_SP, and an
absolute position table. Blocks are pre-normalization residual transformer
layers with per-head projection matrices; attention is masked so a position
sees only itself and earlier *real* (non-pad) positions. The prediction anchor
is the last non-pad position's row, scored against the tied item-embedding
table with the padding column removed from the distribution.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .config import STREAM_DROPOUT, STREAM_INIT_STUDENT, rng_for
from .errors import ConfigError, InvalidArgumentError, InvalidSampleError
from .tensor import Tensor


class StudentParams:
    """All trainable student arrays plus the frozen-row bookkeeping."""

    def __init__(self, n_takeaways: int, n_regions: int, n: int, d: int,
                 heads: int = 2, layers: int = 2, n_dist_buckets: int = 16,
                 dropout: float = 0.1, seed: int = 0):
        if d % heads != 0:
            raise ConfigError(f"d={d} must be divisible by heads={heads}")
        if min(n_takeaways, n, d, heads, layers) < 1:
            raise ConfigError("model dimensions must be positive")
        rng = rng_for(seed, STREAM_INIT_STUDENT)

        def init(*shape):
            w = rng.normal(0.0, 0.02, size=shape)
            return Tensor(np.clip(w, -0.04, 0.04), requires_grad=True)

        self.n = n
        self.d = d
        self.heads = heads
        self.layers = layers
        self.d_head = d // heads
        self.dropout = dropout
        self.n_takeaways = n_takeaways
        self.n_regions = n_regions
        self.n_dist_buckets = n_dist_buckets
        self.seed = seed

        self.item_emb = init(n_takeaways + 1, d)
        self.item_emb.data[0] = 0.0
        self.region_emb = init(n_regions + 1, d)
        self.region_emb.data[0] = 0.0
        self.dist_emb = init(n_dist_buckets + 2, d)
        self.dist_emb.data[0] = 0.0
        self.W_SP = init(d, d)
        self.pos_emb = init(n, d)
        self.blocks = []
        for _ in range(layers):
            blk = {
                "Wq": [init(d, self.d_head) for _ in range(heads)],
                "Wk": [init(d, self.d_head) for _ in range(heads)],
                "Wv": [init(d, self.d_head) for _ in range(heads)],
                "Wo": init(d, d),
                "ln1_g": Tensor(np.ones(d), requires_grad=True),
                "ln1_b": Tensor(np.zeros(d), requires_grad=True),
                "ln2_g": Tensor(np.ones(d), requires_grad=True),
                "ln2_b": Tensor(np.zeros(d), requires_grad=True),
                "ffn_W1": init(d, 4 * d),
                "ffn_b1": Tensor(np.zeros(4 * d), requires_grad=True),
                "ffn_W2": init(4 * d, d),
                "ffn_b2": Tensor(np.zeros(d), requires_grad=True),
            }
            self.blocks.append(blk)
        # an extra fusion projection, used only by the "cat" strategy
        self.W_cat = init(2 * d, d)

    def as_dict(self) -> dict[str, Tensor]:
        out = {"item_emb": self.item_emb, "region_emb": self.region_emb,
               "dist_emb": self.dist_emb, "W_SP": self.W_SP,
               "pos_emb": self.pos_emb, "W_cat": self.W_cat}
        for l, blk in enumerate(self.blocks):
            for key, val in blk.items():
                if isinstance(val, list):
                    for i, t in enumerate(val):
                        out[f"b{l}_{key}{i}"] = t
                else:
                    out[f"b{l}_{key}"] = val
        return out

    def pad_frozen_rows(self) -> dict[str, list[int]]:
        return {"item_emb": [0], "region_emb": [0], "dist_emb": [0]}

    def build_config(self) -> dict:
        """Constructor kwargs needed to rebuild an identically-shaped model."""
        return {"n_takeaways": self.n_takeaways, "n_regions": self.n_regions,
                "n": self.n, "d": self.d, "heads": self.heads,
                "layers": self.layers, "n_dist_buckets": self.n_dist_buckets,
                "dropout": self.dropout, "seed": self.seed}


def spatial_position_embedding(x_c: np.ndarray, x_f: np.ndarray,
                               params: StudentParams) -> Tensor:
    """E_SP = (region_emb[x_c] + dist_emb[x_f]) @ W_SP; pad rows stay zero."""
    e_c = T.take_rows(params.region_emb, np.asarray(x_c))
    e_f = T.take_rows(params.dist_emb, np.asarray(x_f))
    return (e_c + e_f) @ params.W_SP


def embed_sequence(x: np.ndarray, x_c: np.ndarray, x_f: np.ndarray,
                   params: StudentParams, train: bool = False,
                   rng: np.random.Generator | None = None) -> Tensor:
    """Item + spatial-position + absolute-position embeddings, then dropout."""
    e_x = T.take_rows(params.item_emb, np.asarray(x))
    e = e_x + spatial_position_embedding(x_c, x_f, params) + params.pos_emb
    if train and params.dropout > 0.0:
        e = T.dropout(e, params.dropout, rng)
    return e


def _attention_mask(x: np.ndarray) -> np.ndarray:
    """(b, n, n) boolean: query i may see key j iff j <= i and item j is real."""
    x = np.asarray(x)
    b, n = x.shape
    causal = np.tril(np.ones((n, n), dtype=bool))
    key_real = (x != 0)[:, None, :]
    return causal[None, :, :] & key_real


def attention_block(h: Tensor, blk: dict, mask: np.ndarray, d_head: int,
                    train: bool = False, dropout: float = 0.0,
                    rng: np.random.Generator | None = None) -> Tensor:
    """Pre-normalization residual block: attention then feed-forward."""
    if mask.shape[-1] != h.data.shape[-2]:
        raise ConfigError(f"mask length {mask.shape[-1]} != sequence length "
                          f"{h.data.shape[-2]}")
    x_norm = T.layer_norm(h, blk["ln1_g"], blk["ln1_b"])
    head_outs = []
    scale = 1.0 / np.sqrt(d_head)
    for Wq, Wk, Wv in zip(blk["Wq"], blk["Wk"], blk["Wv"]):
        q = x_norm @ Wq
        k = x_norm @ Wk
        v = x_norm @ Wv
        scores = (q @ T.swapaxes(k, -1, -2)) * scale
        att = T.masked_softmax(scores, mask)
        head_outs.append(att @ v)
    attn = T.concat(head_outs, axis=-1) @ blk["Wo"]
    if train and dropout > 0.0:
        attn = T.dropout(attn, dropout, rng)
    a = h + attn
    a_norm = T.layer_norm(a, blk["ln2_g"], blk["ln2_b"])
    ffn = T.relu(a_norm @ blk["ffn_W1"] + blk["ffn_b1"]) @ blk["ffn_W2"] \
        + blk["ffn_b2"]
    if train and dropout > 0.0:
        ffn = T.dropout(ffn, dropout, rng)
    return a + ffn


def encode(x, x_c, x_f, params: StudentParams, train: bool = False,
           seed: int = 0, step: int = 0) -> Tensor:
    """Embedding plus all attention blocks; returns (b, n, d) states."""
    x = np.atleast_2d(np.asarray(x))
    x_c = np.atleast_2d(np.asarray(x_c))
    x_f = np.atleast_2d(np.asarray(x_f))
    rng = rng_for(seed, STREAM_DROPOUT, step) if train else None
    h = embed_sequence(x, x_c, x_f, params, train=train, rng=rng)
    mask = _attention_mask(x)
    for blk in params.blocks:
        h = attention_block(h, blk, mask, params.d_head, train=train,
                            dropout=params.dropout, rng=rng)
    return h


def _anchor_indices(x: np.ndarray) -> np.ndarray:
    """Index of the last non-pad position per row; error if a row is all-pad."""
    real = x != 0
    if np.any(~real.any(axis=-1)):
        bad = int(np.flatnonzero(~real.any(axis=-1))[0])
        raise InvalidSampleError(f"sample {bad} has no non-pad position")
    n = x.shape[-1]
    return n - 1 - np.argmax(real[:, ::-1], axis=-1)


def predict_scores(x, x_c, x_f, params: StudentParams, train: bool = False,
                   seed: int = 0, step: int = 0,
                   fused: Tensor | None = None,
                   fusion: str = "stkd") -> tuple[Tensor, Tensor]:
    """Returns (probs (b, |V|+1) with pad column 0, raw logits (b, |V|+1)).

    `fused`, when given, is a teacher readout (b, d) merged into the anchor
    according to `fusion`: add, multi (elementwise product), or cat
    (concatenation followed by a linear map back to d).
    """
    x = np.atleast_2d(np.asarray(x))
    h = encode(x, x_c, x_f, params, train=train, seed=seed, step=step)
    h_star = T.take_positions(h, _anchor_indices(x))
    if fused is not None:
        if fusion == "add":
            h_star = h_star + fused
        elif fusion == "multi":
            h_star = h_star * fused
        elif fusion == "cat":
            h_star = T.concat([h_star, fused], axis=-1) @ params.W_cat
        else:
            raise InvalidArgumentError(f"unknown fusion strategy {fusion!r}")
    return score_items(h_star, params)


def score_items(h_star: Tensor, params: StudentParams) -> tuple[Tensor, Tensor]:
    """Score an anchor row against the tied item table; pad column masked."""
    logits = h_star @ T.swapaxes(params.item_emb, 0, 1)   # (b, |V|+1)
    valid = np.ones(logits.data.shape, dtype=bool)
    valid[:, 0] = False
    probs = T.masked_softmax(logits, valid)
    return probs, logits


def kd_loss(teacher_logits, student_logits: Tensor, temperature: float) -> Tensor:
    """KL(softmax(teacher/t) || softmax(student/t)) * t^2, teacher constant.

    Both logit sets cover dense ids 0..|V| and the padding column 0 is masked
    out of both softmaxes. Accepts (|V|+1,) vectors or (b, |V|+1) batches;
    batches are averaged.
    """
    if temperature <= 0:
        raise InvalidArgumentError(
            f"temperature must be positive, got {temperature}")
    t_arr = teacher_logits.data if isinstance(teacher_logits, Tensor) \
        else np.asarray(teacher_logits, dtype=student_logits.data.dtype)
    if t_arr.shape != student_logits.data.shape:
        raise InvalidArgumentError(
            f"logit shape mismatch: {t_arr.shape} vs "
            f"{student_logits.data.shape}")
    squeeze = t_arr.ndim == 1
    if squeeze:
        t_arr = t_arr[None, :]
        student_logits = T.reshape(student_logits, (1, -1))
    valid = np.ones(t_arr.shape, dtype=bool)
    valid[:, 0] = False
    p = T.masked_softmax(Tensor(t_arr), valid, temperature=temperature).data
    q = T.masked_softmax(student_logits, valid, temperature=temperature)
    # KL restricted to the unmasked support; p and q are exactly 0 on pads
    p_logp = np.sum(np.where(p > 0, p * np.log(np.maximum(p, T.CLAMP)), 0.0))
    cross = T.tsum(Tensor(p) * T.log(q))
    n_rows = t_arr.shape[0]
    return T.mul(T.div(T.sub(float(p_logp), cross), float(n_rows)),
                 temperature ** 2)


def rec_loss(probs: Tensor, targets) -> Tensor:
    """Mean cross-entropy of the predicted distribution against dense targets."""
    targets = np.atleast_1d(np.asarray(targets))
    if np.any(targets == 0):
        raise InvalidArgumentError("target is the padding id 0")
    if probs.data.ndim == 1:
        probs = T.reshape(probs, (1, -1))
    return T.batch_cross_entropy(probs, targets)


def joint_loss(kd: Tensor | float, rec: Tensor | float, alpha: float) -> Tensor:
    """alpha * kd + (1 - alpha) * rec; endpoints skip the unused term."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return T.as_tensor(rec)
    if alpha == 1.0:
        return T.as_tensor(kd)
    return T.add(T.mul(T.as_tensor(kd), alpha),
                 T.mul(T.as_tensor(rec), 1.0 - alpha))


def recommend(x, x_c, x_f, params: StudentParams, k: int = 10):
    """Top-k (item id, probability) pairs for one sequence."""
    probs, _ = predict_scores(x, x_c, x_f, params)
    row = probs.data[0]
    top = np.argsort(-row, kind="stable")[:k]
    return [(int(i), float(row[i])) for i in top]
