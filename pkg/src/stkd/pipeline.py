"""Two-stage training pipeline, ranked evaluation, ablations, and sweeps.

Stage one pre-trains the graph teacher on the spatial-temporal knowledge
graph and (optionally) caches its soft labels for every training sample.
Stage two trains the sequence student on the joint objective

    loss = alpha * kd_loss + (1 - alpha) * rec_loss,

where the teacher signal enters either through cached soft labels or a
live teacher forward — the two paths produce the same loss trace because
the per-sample subgraphs are deterministic.  Evaluation ranks each user's
held-out target against sampled negatives and reports HR@k / NDCG@k with
wall-clock timing split into training and prediction phases.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .config import STREAM_SHUFFLE, TrainConfig, rng_for
from .errors import (ConfigError, ConsistencyError, InvalidArgumentError,
                     NumericsError, VocabMismatchError)
from .graph import Stkg, Subgraph, sample_subgraph
from .instrument import Counters
from .metrics import MetricAccumulator, rank_of_target, sample_negatives
from .optim import Adam
from .sequences import SequenceDataset
from .student import (StudentParams, joint_loss, kd_loss, predict_scores,
                      rec_loss)
from .teacher import (TeacherParams, pretrain_step, teacher_forward,
                      teacher_optimizer, teacher_readout)
from .tensor import CLAMP, Tensor

SOFT_LABEL_FORMAT_VERSION = 1
FUSION_STRATEGIES = ("stkd", "add", "cat", "multi")
ABLATION_VARIANTS = ("full", "no_kd", "no_sp", "no_sp_kd", "no_c", "no_f")

__all__ = [
    "MetricsReport",
    "SubgraphProvider",
    "TrainResult",
    "pretrain_teacher",
    "compute_soft_labels",
    "save_soft_labels",
    "load_soft_labels",
    "distill",
    "evaluate",
    "ablate",
    "ablate_fusion",
    "sweep",
    "ABLATION_VARIANTS",
    "FUSION_STRATEGIES",
]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class MetricsReport:
    """HR@k / NDCG@k averages plus timing and provenance for one run."""

    hr: dict[int, float]
    ndcg: dict[int, float]
    counts: dict[str, int]
    train_seconds: float
    predict_seconds: float
    config: dict
    seed: int
    split: str = "test"

    def __post_init__(self) -> None:
        ks = sorted(self.hr)
        if ks != sorted(self.ndcg):
            raise ConsistencyError("hr and ndcg must share cutoffs")
        for table in (self.hr, self.ndcg):
            for k, v in table.items():
                if not 0.0 <= v <= 1.0:
                    raise ConsistencyError(f"metric at k={k} outside [0,1]: {v}")
        for lo, hi in zip(ks, ks[1:]):
            if self.hr[hi] < self.hr[lo] or self.ndcg[hi] < self.ndcg[lo]:
                raise ConsistencyError(
                    f"metrics must be non-decreasing in k ({lo} -> {hi})")

    def to_dict(self) -> dict:
        return {
            "hr": {str(k): v for k, v in sorted(self.hr.items())},
            "ndcg": {str(k): v for k, v in sorted(self.ndcg.items())},
            "counts": dict(self.counts),
            "train_seconds": self.train_seconds,
            "predict_seconds": self.predict_seconds,
            "config": self.config,
            "seed": self.seed,
            "split": self.split,
        }

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True)
                        + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(hr={int(k): v for k, v in d["hr"].items()},
                   ndcg={int(k): v for k, v in d["ndcg"].items()},
                   counts=d["counts"], train_seconds=d["train_seconds"],
                   predict_seconds=d["predict_seconds"], config=d["config"],
                   seed=d["seed"], split=d.get("split", "test"))


@dataclass
class TrainResult:
    """Outcome of a pretrain or distill loop."""

    params: object
    best_metric: float
    best_epoch: int
    epochs_run: int
    loss_trace: list[float] = field(default_factory=list)
    train_seconds: float = 0.0
    aborted: bool = False


# ---------------------------------------------------------------------------
# batching helpers
# ---------------------------------------------------------------------------

def _batches(order: np.ndarray, batch_size: int):
    for start in range(0, order.size, batch_size):
        yield order[start:start + batch_size]


class SubgraphProvider:
    """Samples the deterministic per-sample subgraph once and caches it."""

    def __init__(self, dataset: SequenceDataset, stkg: Stkg,
                 fanouts: tuple[int, int], seed: int,
                 counters: Counters | None = None):
        self.dataset = dataset
        self.stkg = stkg
        self.fanouts = tuple(fanouts)
        self.seed = seed
        self.counters = counters
        self._cache: dict[int, Subgraph] = {}

    def get(self, row: int) -> Subgraph:
        sid = self.dataset.sid(row)
        sg = self._cache.get(sid)
        if sg is None:
            sg = sample_subgraph(self.dataset.items[row],
                                 int(self.dataset.user[row]), self.stkg,
                                 self.fanouts, self.seed, sid)
            if self.counters is not None:
                self.counters.bump("subgraph_samples")
            self._cache[sid] = sg
        return sg

    def batch(self, rows: np.ndarray) -> list[Subgraph]:
        return [self.get(int(r)) for r in rows]


def _snapshot(params) -> dict[str, np.ndarray]:
    return {k: t.data.copy() for k, t in params.as_dict().items()}


def _restore(params, snapshot: dict[str, np.ndarray]) -> None:
    for k, t in params.as_dict().items():
        t.data[:] = snapshot[k]


# ---------------------------------------------------------------------------
# ranking shared by teacher validation and student evaluation
# ---------------------------------------------------------------------------

def _ranked_metrics(score_rows, dataset: SequenceDataset, rows: np.ndarray,
                    k_list, n_negatives: int, seed: int,
                    n_takeaways: int) -> MetricAccumulator:
    """Accumulate HR/NDCG over ``rows``.

    ``score_rows(batch_rows) -> (b, |V|+1) ndarray`` produces model scores;
    everything else (negative sampling, ranking) is model-agnostic.
    """
    acc = MetricAccumulator(k_list=tuple(k_list))
    for batch in _batches(rows, 256):
        scores = score_rows(batch)
        for i, row in enumerate(batch):
            user = int(dataset.user[row])
            target = int(dataset.target[row])
            negs, truncated = sample_negatives(
                user, target, dataset.purchased_by(user), n_takeaways,
                n_negatives, seed)
            rank = rank_of_target(scores[i, target], scores[i, negs])
            acc.add(rank, truncated)
    return acc


# ---------------------------------------------------------------------------
# stage one: teacher pre-training
# ---------------------------------------------------------------------------

def build_teacher(cfg: TrainConfig, stkg: Stkg, n_users: int,
                  n_takeaways: int) -> TeacherParams:
    return TeacherParams(n_entities=stkg.n_entities,
                         n_relations=stkg.n_relations, n=cfg.n, d=cfg.d,
                         gnn_layers=cfg.gnn_layers, seed=cfg.seed,
                         n_users=n_users, n_takeaways=n_takeaways)


def _teacher_val_ndcg(params: TeacherParams, provider: SubgraphProvider,
                      dataset: SequenceDataset, cfg: TrainConfig,
                      counters: Counters | None) -> float:
    rows = dataset.rows("valid")
    if rows.size == 0:
        return 0.0

    def score_rows(batch):
        return teacher_forward(provider.batch(batch), params, counters).data

    acc = _ranked_metrics(score_rows, dataset, rows, (10,), cfg.n_negatives,
                          cfg.seed, params.n_takeaways)
    return acc.ndcg(10)


def pretrain_teacher(cfg: TrainConfig, dataset: SequenceDataset, stkg: Stkg,
                     n_users: int, n_takeaways: int,
                     counters: Counters | None = None,
                     provider: SubgraphProvider | None = None) -> TrainResult:
    """Train the graph teacher with early stopping on validation NDCG@10.

    A non-finite training loss aborts the loop; the best (last good)
    parameter snapshot is restored before returning.
    """
    if dataset.rows("train").size == 0:
        raise InvalidArgumentError("dataset has no training rows")
    params = build_teacher(cfg, stkg, n_users, n_takeaways)
    opt = teacher_optimizer(params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    if provider is None:
        provider = SubgraphProvider(dataset, stkg, cfg.fanouts, cfg.seed,
                                    counters)
    train_rows = dataset.rows("train")

    best = _snapshot(params)
    best_metric, best_epoch, bad_epochs = -np.inf, -1, 0
    trace: list[float] = []
    aborted = False
    t0 = time.perf_counter()
    epoch = 0
    for epoch in range(cfg.epochs):
        order = rng_for(cfg.seed, STREAM_SHUFFLE, epoch).permutation(train_rows)
        for batch in _batches(order, cfg.batch_size):
            try:
                loss = pretrain_step(provider.batch(batch),
                                     dataset.target[batch], params, opt,
                                     counters)
            except NumericsError:
                # debug-mode finite checks surface divergence as an error
                aborted = True
                break
            trace.append(loss)
            if not np.isfinite(loss):
                aborted = True
                break
        if aborted:
            break
        metric = _teacher_val_ndcg(params, provider, dataset, cfg, counters)
        if metric > best_metric:
            best_metric, best_epoch, bad_epochs = metric, epoch, 0
            best = _snapshot(params)
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    train_seconds = time.perf_counter() - t0
    _restore(params, best)
    if best_epoch < 0:
        best_metric = 0.0
    return TrainResult(params=params, best_metric=max(best_metric, 0.0),
                       best_epoch=best_epoch, epochs_run=epoch + 1,
                       loss_trace=trace, train_seconds=train_seconds,
                       aborted=aborted)


# ---------------------------------------------------------------------------
# soft-label cache
# ---------------------------------------------------------------------------

def compute_soft_labels(params: TeacherParams, provider: SubgraphProvider,
                        dataset: SequenceDataset,
                        rows: np.ndarray | None = None,
                        batch_size: int = 256,
                        counters: Counters | None = None):
    """Teacher probabilities for every requested row; returns (rows, probs)."""
    if rows is None:
        rows = dataset.rows("train")
    out = np.zeros((rows.size, params.n_takeaways + 1))
    for start in range(0, rows.size, batch_size):
        batch = rows[start:start + batch_size]
        probs = teacher_forward(provider.batch(batch), params, counters)
        out[start:start + batch.size] = probs.data
    return rows.astype(np.int64), out


def save_soft_labels(path, rows: np.ndarray, probs: np.ndarray,
                     vocab_hash: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, format_version=np.array(SOFT_LABEL_FORMAT_VERSION),
             rows=rows, probs=probs, vocab_hash=np.array(vocab_hash))


def load_soft_labels(path, expected_vocab_hash: str | None = None):
    with np.load(Path(path), allow_pickle=False) as z:
        if "format_version" not in z or int(z["format_version"]) != \
                SOFT_LABEL_FORMAT_VERSION:
            raise ConsistencyError(f"{path}: unsupported soft-label cache")
        rows, probs = z["rows"], z["probs"]
        vocab_hash = str(z["vocab_hash"])
    if expected_vocab_hash is not None and vocab_hash != expected_vocab_hash:
        raise VocabMismatchError(
            f"{path}: soft labels built against vocabulary {vocab_hash[:12]}… "
            f"but current data hashes to {expected_vocab_hash[:12]}…")
    return rows, probs, vocab_hash


class TeacherSignal:
    """Uniform source of per-row teacher logits for distillation.

    Cached probabilities and a live teacher agree because logits are taken
    as log of the soft-label distribution in both cases (softmax is
    invariant to the shared log-normalizer).
    """

    def __init__(self, cached: tuple[np.ndarray, np.ndarray] | None = None,
                 teacher: TeacherParams | None = None,
                 provider: SubgraphProvider | None = None,
                 counters: Counters | None = None):
        if cached is None and teacher is None:
            raise InvalidArgumentError(
                "distillation needs a soft-label cache or a live teacher")
        self._index: dict[int, int] = {}
        self._probs: np.ndarray | None = None
        if cached is not None:
            rows, probs = cached
            self._index = {int(r): i for i, r in enumerate(rows)}
            self._probs = probs
        self.teacher = teacher
        self.provider = provider
        self.counters = counters

    def logits(self, rows: np.ndarray) -> np.ndarray:
        if self._probs is not None:
            try:
                idx = [self._index[int(r)] for r in rows]
            except KeyError as exc:
                raise ConsistencyError(
                    f"row {exc.args[0]} missing from the soft-label cache")
            probs = self._probs[idx]
        else:
            probs = teacher_forward(self.provider.batch(rows), self.teacher,
                                    self.counters).data
        return np.log(np.maximum(probs, CLAMP))


# ---------------------------------------------------------------------------
# stage two: distillation / student training
# ---------------------------------------------------------------------------

def build_student(cfg: TrainConfig, n_takeaways: int,
                  n_regions: int) -> StudentParams:
    return StudentParams(n_takeaways=n_takeaways, n_regions=n_regions,
                         n=cfg.n, d=cfg.d, heads=cfg.heads, layers=cfg.layers,
                         dropout=cfg.dropout, seed=cfg.seed)


def _apply_variant(params: StudentParams, opt: Adam, variant: str) -> None:
    """Zero and freeze the parameter groups a variant removes."""
    if variant in ("full", "no_kd"):
        return
    if variant in ("no_sp", "no_sp_kd"):
        groups = ("region_emb", "dist_emb", "W_SP")
    elif variant == "no_c":
        groups = ("region_emb",)
    elif variant == "no_f":
        groups = ("dist_emb",)
    else:
        raise InvalidArgumentError(
            f"unknown variant {variant!r}; expected one of {ABLATION_VARIANTS}")
    for name in groups:
        getattr(params, name).data[:] = 0.0
        opt.freeze.add(name)


def variant_alpha(cfg: TrainConfig, variant: str) -> float:
    if variant not in ABLATION_VARIANTS:
        raise InvalidArgumentError(
            f"unknown variant {variant!r}; expected one of {ABLATION_VARIANTS}")
    return 0.0 if variant in ("no_kd", "no_sp_kd") else cfg.alpha


def _student_val_ndcg(params: StudentParams, dataset: SequenceDataset,
                      cfg: TrainConfig, fusion: str = "stkd",
                      fused_rows=None) -> float:
    rows = dataset.rows("valid")
    if rows.size == 0:
        return 0.0

    def score_rows(batch):
        fused = fused_rows(batch) if fused_rows is not None else None
        probs, _ = predict_scores(dataset.items[batch], dataset.regions[batch],
                                  dataset.dists[batch], params, fused=fused,
                                  fusion=fusion)
        return probs.data

    acc = _ranked_metrics(score_rows, dataset, rows, (10,), cfg.n_negatives,
                          cfg.seed, params.n_takeaways)
    return acc.ndcg(10)


def distill(cfg: TrainConfig, dataset: SequenceDataset, n_takeaways: int,
            n_regions: int, signal: TeacherSignal | None = None,
            variant: str = "full", fusion: str = "stkd",
            fusion_readout=None) -> TrainResult:
    """Train the student on the joint objective with early stopping.

    ``variant`` selects the ablation (parameter-group freezing and the KD
    blend).  ``fusion`` other than "stkd" replaces distillation with feature
    fusion: ``fusion_readout(rows) -> Tensor (b, d)`` supplies the teacher
    representation merged into the prediction anchor, and the objective
    reduces to the recommendation loss.
    """
    if fusion not in FUSION_STRATEGIES:
        raise InvalidArgumentError(
            f"unknown fusion strategy {fusion!r}; expected {FUSION_STRATEGIES}")
    if fusion != "stkd" and fusion_readout is None:
        raise InvalidArgumentError(f"fusion {fusion!r} needs a teacher readout")
    alpha = variant_alpha(cfg, variant) if fusion == "stkd" else 0.0
    if alpha > 0.0 and signal is None:
        raise InvalidArgumentError(
            "alpha > 0 requires teacher soft labels; pass a TeacherSignal")

    params = build_student(cfg, n_takeaways, n_regions)
    opt = Adam(params.as_dict(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
               freeze_rows=params.pad_frozen_rows())
    _apply_variant(params, opt, variant)

    train_rows = dataset.rows("train")
    if train_rows.size == 0:
        raise InvalidArgumentError("dataset has no training rows")

    best = _snapshot(params)
    best_metric, best_epoch, bad_epochs = -np.inf, -1, 0
    trace: list[float] = []
    aborted = False
    step = 0
    t0 = time.perf_counter()
    epoch = 0
    for epoch in range(cfg.epochs):
        order = rng_for(cfg.seed, STREAM_SHUFFLE, epoch).permutation(train_rows)
        for batch in _batches(order, cfg.batch_size):
            try:
                fused = None
                if fusion != "stkd":
                    fused = fusion_readout(batch)
                    if isinstance(fused, Tensor):
                        fused = Tensor(fused.data)   # frozen teacher features
                probs, logits = predict_scores(
                    dataset.items[batch], dataset.regions[batch],
                    dataset.dists[batch], params, train=True, seed=cfg.seed,
                    step=step, fused=fused, fusion=fusion)
                rec = rec_loss(probs, dataset.target[batch])
                if alpha > 0.0:
                    kd = kd_loss(signal.logits(batch), logits, cfg.temperature)
                else:
                    kd = 0.0
                loss = joint_loss(kd, rec, alpha)
                opt.zero_grad()
                loss.backward()
                opt.step()
            except NumericsError:
                # debug-mode finite checks surface divergence as an error
                aborted = True
                break
            trace.append(float(loss.data))
            step += 1
            if not np.isfinite(trace[-1]):
                aborted = True
                break
        if aborted:
            break
        metric = _student_val_ndcg(params, dataset, cfg, fusion=fusion,
                                   fused_rows=fusion_readout)
        if metric > best_metric:
            best_metric, best_epoch, bad_epochs = metric, epoch, 0
            best = _snapshot(params)
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    train_seconds = time.perf_counter() - t0
    _restore(params, best)
    return TrainResult(params=params, best_metric=max(best_metric, 0.0),
                       best_epoch=best_epoch, epochs_run=epoch + 1,
                       loss_trace=trace, train_seconds=train_seconds,
                       aborted=aborted)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(params: StudentParams, dataset: SequenceDataset,
             cfg: TrainConfig, split: str = "test",
             train_seconds: float = 0.0, fusion: str = "stkd",
             fusion_readout=None,
             counters: Counters | None = None) -> MetricsReport:
    """Rank each held-out target against sampled negatives.

    ``predict_seconds`` accumulates only model forward time (including any
    teacher fusion work); sampling negatives and bookkeeping are excluded.
    """
    if fusion not in FUSION_STRATEGIES:
        raise InvalidArgumentError(
            f"unknown fusion strategy {fusion!r}; expected {FUSION_STRATEGIES}")
    if fusion != "stkd" and fusion_readout is None:
        raise InvalidArgumentError(f"fusion {fusion!r} needs a teacher readout")
    rows = dataset.rows(split)
    timer = {"predict": 0.0}

    def score_rows(batch):
        t0 = time.perf_counter()
        fused = None
        if fusion != "stkd":
            fused = fusion_readout(batch)
        probs, _ = predict_scores(dataset.items[batch], dataset.regions[batch],
                                  dataset.dists[batch], params, fused=fused,
                                  fusion=fusion)
        timer["predict"] += time.perf_counter() - t0
        return probs.data

    acc = _ranked_metrics(score_rows, dataset, rows, cfg.k_list,
                          cfg.n_negatives, cfg.seed, params.n_takeaways)
    counts = {"n_instances": acc.n_instances, "n_truncated": acc.n_truncated}
    if counters is not None:
        counts.update(counters.snapshot())
    return MetricsReport(hr={k: acc.hr(k) for k in cfg.k_list},
                         ndcg={k: acc.ndcg(k) for k in cfg.k_list},
                         counts=counts, train_seconds=train_seconds,
                         predict_seconds=timer["predict"],
                         config=cfg.to_dict(), seed=cfg.seed, split=split)


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------

def _teacher_and_signal(cfg: TrainConfig, dataset: SequenceDataset,
                        stkg: Stkg, n_users: int, n_takeaways: int,
                        counters: Counters | None):
    provider = SubgraphProvider(dataset, stkg, cfg.fanouts, cfg.seed, counters)
    result = pretrain_teacher(cfg, dataset, stkg, n_users, n_takeaways,
                              counters, provider)
    if cfg.cache_soft_labels:
        rows, probs = compute_soft_labels(result.params, provider, dataset,
                                          counters=counters)
        signal = TeacherSignal(cached=(rows, probs))
    else:
        signal = TeacherSignal(teacher=result.params, provider=provider,
                               counters=counters)
    return result, provider, signal


def ablate(cfg: TrainConfig, dataset: SequenceDataset, stkg: Stkg,
           n_users: int, n_takeaways: int, n_regions: int,
           variants=ABLATION_VARIANTS, split: str = "test",
           counters: Counters | None = None):
    """One report per ablation variant, sharing seed, data, and teacher."""
    for v in variants:
        if v not in ABLATION_VARIANTS:
            raise InvalidArgumentError(
                f"unknown variant {v!r}; expected one of {ABLATION_VARIANTS}")
    needs_teacher = any(variant_alpha(cfg, v) > 0.0 for v in variants)
    signal, teacher_seconds = None, 0.0
    if needs_teacher:
        teacher_result, _, signal = _teacher_and_signal(
            cfg, dataset, stkg, n_users, n_takeaways, counters)
        teacher_seconds = teacher_result.train_seconds

    reports: dict[str, MetricsReport] = {}
    for variant in variants:
        alpha = variant_alpha(cfg, variant)
        result = distill(cfg, dataset, n_takeaways, n_regions,
                         signal=signal if alpha > 0.0 else None,
                         variant=variant)
        total = result.train_seconds + (teacher_seconds if alpha > 0.0 else 0.0)
        reports[variant] = evaluate(result.params, dataset, cfg, split=split,
                                    train_seconds=total)
    return reports


def ablate_fusion(cfg: TrainConfig, dataset: SequenceDataset, stkg: Stkg,
                  n_users: int, n_takeaways: int, n_regions: int,
                  strategies=FUSION_STRATEGIES, split: str = "test"):
    """Compare distillation against feature-fusion alternatives with timing.

    Every strategy gets its own instrumentation counters; the returned
    reports carry them under ``counts`` so callers can verify that the
    distilled path never touches the teacher at inference.
    """
    for s in strategies:
        if s not in FUSION_STRATEGIES:
            raise InvalidArgumentError(
                f"unknown fusion strategy {s!r}; expected {FUSION_STRATEGIES}")
    # one shared pre-training pass: every strategy consumes the same teacher
    shared = Counters()
    teacher_result, provider, signal = _teacher_and_signal(
        cfg, dataset, stkg, n_users, n_takeaways, shared)

    reports: dict[str, MetricsReport] = {}
    for strategy in strategies:
        counters = Counters()
        if strategy == "stkd":
            result = distill(cfg, dataset, n_takeaways, n_regions, signal=signal,
                             variant="full")
            reports[strategy] = evaluate(result.params, dataset, cfg,
                                         split=split, fusion="stkd",
                                         train_seconds=teacher_result.train_seconds
                                         + result.train_seconds,
                                         counters=counters)
        else:
            eval_provider = SubgraphProvider(dataset, stkg, cfg.fanouts,
                                             cfg.seed, counters)

            def readout(rows, _p=eval_provider):
                return teacher_readout(_p.batch(rows), teacher_result.params,
                                       counters)

            result = distill(cfg, dataset, n_takeaways, n_regions, variant="full",
                             fusion=strategy, fusion_readout=readout)
            reports[strategy] = evaluate(result.params, dataset, cfg,
                                         split=split, fusion=strategy,
                                         fusion_readout=readout,
                                         train_seconds=teacher_result.train_seconds
                                         + result.train_seconds,
                                         counters=counters)
    return reports


TEMPERATURE_GRID = (1.0, 3.0, 5.0, 7.0, 9.0)
FANOUT_GRID = ((5, 5), (10, 10), (15, 15), (20, 20))


def sweep(cfg: TrainConfig, dataset: SequenceDataset, stkg: Stkg,
          n_users: int, n_takeaways: int, n_regions: int,
          parameter: str = "temperature", split: str = "test"):
    """Grid sweep over the distillation temperature or the sampling fanouts."""
    if parameter == "temperature":
        grid = [("temperature", tau) for tau in TEMPERATURE_GRID]
    elif parameter == "fanouts":
        grid = [("fanouts", f) for f in FANOUT_GRID]
    else:
        raise InvalidArgumentError(
            f"sweep parameter must be 'temperature' or 'fanouts', "
            f"got {parameter!r}")
    # the temperature only enters distillation, so one teacher serves the
    # whole temperature axis; fanouts change the subgraphs and force a
    # fresh pre-training per setting
    shared = (_teacher_and_signal(cfg, dataset, stkg, n_users, n_takeaways,
                                  None)
              if parameter == "temperature" else None)
    reports = {}
    for key, value in grid:
        run_cfg = TrainConfig.from_dict({**cfg.to_dict(), key: value})
        if shared is not None:
            teacher_result, _, signal = shared
        else:
            teacher_result, _, signal = _teacher_and_signal(
                run_cfg, dataset, stkg, n_users, n_takeaways, None)
        result = distill(run_cfg, dataset, n_takeaways, n_regions,
                         signal=signal, variant="full")
        label = f"{key}={value}"
        reports[label] = evaluate(result.params, dataset, run_cfg, split=split,
                                  train_seconds=teacher_result.train_seconds
                                  + result.train_seconds)
    return reports
