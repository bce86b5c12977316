"""Command-line entry points for generation, preparation, training, and studies.

Commands share one JSON configuration file (every training-config field is
addressable by key) plus a few overriding flags.  Artifacts land under
``--out-dir`` with fixed names so that successive commands find each other's
outputs without extra plumbing:

    events.jsonl            synthetic or ingested purchase events
    vocab.json              id maps + content hash
    dataset.npz             columnar (prefix -> target) samples with splits
    graph.npz               spatial-temporal knowledge graph (CSR)
    teacher.npz             pre-trained graph-teacher checkpoint
    soft_labels.npz         cached teacher distributions for training rows
    student.npz             distilled student checkpoint
    metrics_<split>.json    evaluation report
    ablation_<variant>.json / fusion_<strategy>.json / sweep_<label>.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import load_student, load_teacher, save_checkpoint
from .config import TrainConfig
from .errors import StkdError
from .events import ingest_events
from .graph import Stkg, build_stkg, graph_stats
from .instrument import Counters
from .pipeline import (ABLATION_VARIANTS, FUSION_STRATEGIES, SubgraphProvider,
                       TeacherSignal, ablate, ablate_fusion,
                       compute_soft_labels, distill, evaluate, load_soft_labels,
                       pretrain_teacher, save_soft_labels, sweep)
from .sequences import (SequenceDataset, build_sequences, load_vocab,
                        save_vocab)
from .synthetic import SyntheticConfig, write_synthetic

__all__ = ["main"]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None,
                   help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.add_argument("--out-dir", type=str, default=None,
                   help="artifact directory (default: config out_dir)")


def _load_train_config(args) -> TrainConfig:
    if args.config:
        cfg = TrainConfig.load(args.config)
    else:
        cfg = TrainConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out_dir is not None:
        updates["out_dir"] = args.out_dir
    if updates:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), **updates})
    return cfg


def _out_dir(cfg: TrainConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _events_path(cfg: TrainConfig) -> Path:
    return Path(cfg.events_path) if cfg.events_path else _out_dir(cfg) / "events.jsonl"


def _dataset_path(cfg: TrainConfig) -> Path:
    return Path(cfg.dataset_path) if cfg.dataset_path else _out_dir(cfg) / "dataset.npz"


def _graph_path(cfg: TrainConfig) -> Path:
    return Path(cfg.graph_path) if cfg.graph_path else _out_dir(cfg) / "graph.npz"


def _load_prepared(cfg: TrainConfig):
    dataset = SequenceDataset.load(_dataset_path(cfg))
    vocab = load_vocab(_out_dir(cfg) / "vocab.json")
    return dataset, vocab


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_synth(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        overrides["seed"] = args.seed
    scfg = SyntheticConfig(**overrides)
    out = Path(args.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "events.jsonl"
    n = write_synthetic(scfg, path)
    print(json.dumps({"events": n, "path": str(path), "seed": scfg.seed}))
    return 0


def cmd_prepare(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    events, vocab, report = ingest_events(_events_path(cfg))
    dataset = build_sequences(events, vocab, n=cfg.n,
                              max_train_per_user=cfg.max_train_per_user)
    dataset.save(out / "dataset.npz")
    save_vocab(vocab, out / "vocab.json")
    print(json.dumps({
        "events": report.n_events, "malformed": report.n_malformed,
        "rows": len(dataset), "train": int(dataset.rows("train").size),
        "valid": int(dataset.rows("valid").size),
        "test": int(dataset.rows("test").size),
        "skipped_users": dataset.n_skipped_users,
        "vocab_hash": vocab.content_hash(),
    }))
    return 0


def cmd_build_graph(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    events, _, _ = ingest_events(_events_path(cfg))
    vocab = load_vocab(out / "vocab.json")
    stkg = build_stkg(events, vocab)
    stkg.save(_graph_path(cfg))
    stats = graph_stats(stkg)
    (out / "graph_stats.json").write_text(stats.to_json() + "\n",
                                          encoding="utf-8")
    print(stats.to_json())
    return 0


def cmd_pretrain(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    dataset, vocab = _load_prepared(cfg)
    stkg = Stkg.load(_graph_path(cfg))
    counters = Counters()
    provider = SubgraphProvider(dataset, stkg, cfg.fanouts, cfg.seed, counters)
    result = pretrain_teacher(cfg, dataset, stkg, vocab.n_users,
                              vocab.n_takeaways, counters, provider)
    save_checkpoint(out / "teacher.npz", result.params,
                    result.params.build_config(), vocab.content_hash())
    if cfg.cache_soft_labels:
        rows, probs = compute_soft_labels(result.params, provider, dataset,
                                          counters=counters)
        save_soft_labels(out / "soft_labels.npz", rows, probs,
                         vocab.content_hash())
    report = {"best_ndcg10": result.best_metric, "best_epoch": result.best_epoch,
              "epochs_run": result.epochs_run, "aborted": result.aborted,
              "train_seconds": result.train_seconds,
              "final_loss": result.loss_trace[-1] if result.loss_trace else None,
              "counters": counters.snapshot(), "config": cfg.to_dict()}
    (out / "pretrain_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps({k: report[k] for k in
                      ("best_ndcg10", "best_epoch", "epochs_run", "aborted")}))
    return 0


def cmd_distill(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    dataset, vocab = _load_prepared(cfg)
    variant = args.variant or "full"
    signal = None
    if cfg.alpha > 0.0 and variant not in ("no_kd", "no_sp_kd"):
        cache_path = out / "soft_labels.npz"
        if cfg.cache_soft_labels and cache_path.exists():
            rows, probs, _ = load_soft_labels(cache_path, vocab.content_hash())
            signal = TeacherSignal(cached=(rows, probs))
        else:
            teacher, _, _ = load_teacher(out / "teacher.npz",
                                         vocab.content_hash())
            stkg = Stkg.load(_graph_path(cfg))
            provider = SubgraphProvider(dataset, stkg, cfg.fanouts, cfg.seed)
            signal = TeacherSignal(teacher=teacher, provider=provider)
    result = distill(cfg, dataset, vocab.n_takeaways, vocab.n_regions,
                     signal=signal, variant=variant)
    save_checkpoint(out / "student.npz", result.params,
                    result.params.build_config(), vocab.content_hash())
    report = {"best_ndcg10": result.best_metric, "best_epoch": result.best_epoch,
              "epochs_run": result.epochs_run, "aborted": result.aborted,
              "train_seconds": result.train_seconds, "variant": variant,
              "loss_trace": result.loss_trace, "config": cfg.to_dict()}
    (out / "distill_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps({k: report[k] for k in
                      ("best_ndcg10", "best_epoch", "epochs_run", "aborted",
                       "variant")}))
    return 0


def _parse_k(text: str | None):
    if not text:
        return None
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def cmd_evaluate(args) -> int:
    cfg = _load_train_config(args)
    k_list = _parse_k(args.k)
    if k_list:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "k_list": k_list})
    out = _out_dir(cfg)
    dataset, vocab = _load_prepared(cfg)
    student, _, _ = load_student(out / "student.npz", vocab.content_hash())
    train_seconds = 0.0
    report_path = out / "distill_report.json"
    if report_path.exists():
        train_seconds = json.loads(report_path.read_text(encoding="utf-8")).get(
            "train_seconds", 0.0)
    counters = Counters()
    report = evaluate(student, dataset, cfg, split=args.split,
                      train_seconds=train_seconds, counters=counters)
    report.save(out / f"metrics_{args.split}.json")
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    dataset, vocab = _load_prepared(cfg)
    stkg = Stkg.load(_graph_path(cfg))
    variants = tuple(args.variant) if args.variant else ABLATION_VARIANTS
    reports = ablate(cfg, dataset, stkg, vocab.n_users, vocab.n_takeaways,
                     vocab.n_regions, variants=variants, split=args.split)
    summary = {}
    for variant, report in reports.items():
        report.save(out / f"ablation_{variant}.json")
        summary[variant] = {"hr": {str(k): v for k, v in report.hr.items()},
                            "ndcg": {str(k): v for k, v in report.ndcg.items()}}
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_ablate_fusion(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    dataset, vocab = _load_prepared(cfg)
    stkg = Stkg.load(_graph_path(cfg))
    strategies = tuple(args.strategy) if args.strategy else FUSION_STRATEGIES
    reports = ablate_fusion(cfg, dataset, stkg, vocab.n_users,
                            vocab.n_takeaways, vocab.n_regions,
                            strategies=strategies, split=args.split)
    summary = {}
    for strategy, report in reports.items():
        report.save(out / f"fusion_{strategy}.json")
        summary[strategy] = {
            "hr@10": report.hr.get(10), "ndcg@10": report.ndcg.get(10),
            "train_seconds": report.train_seconds,
            "predict_seconds": report.predict_seconds,
            "teacher_forwards": report.counts.get("teacher_forwards", 0),
            "subgraph_samples": report.counts.get("subgraph_samples", 0)}
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_train_config(args)
    out = _out_dir(cfg)
    dataset, vocab = _load_prepared(cfg)
    stkg = Stkg.load(_graph_path(cfg))
    parameter = args.strategy[0] if args.strategy else "temperature"
    reports = sweep(cfg, dataset, stkg, vocab.n_users, vocab.n_takeaways,
                    vocab.n_regions, parameter=parameter, split=args.split)
    summary = {}
    for label, report in reports.items():
        safe = label.replace("=", "_").replace(" ", "").replace(",", "-") \
                    .replace("(", "").replace(")", "")
        report.save(out / f"sweep_{safe}.json")
        summary[label] = {"hr@10": report.hr.get(10),
                          "ndcg@10": report.ndcg.get(10)}
    print(json.dumps(summary, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stkd",
        description="spatial-temporal knowledge-distilled takeaway "
                    "recommendation: data prep, training, evaluation, studies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic event corpus")
    _add_common(p)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("prepare", help="ingest events into dataset + vocab")
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("build-graph", help="build the knowledge graph")
    _add_common(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("pretrain", help="pre-train the graph teacher")
    _add_common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("distill", help="train the student (optionally with KD)")
    _add_common(p)
    p.add_argument("--variant", choices=ABLATION_VARIANTS, default=None)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("evaluate", help="ranked evaluation of the student")
    _add_common(p)
    p.add_argument("--split", choices=("train", "valid", "test"),
                   default="test")
    p.add_argument("--k", type=str, default=None,
                   help="comma-separated cutoffs, e.g. 5,10,20")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run ablation variants")
    _add_common(p)
    p.add_argument("--variant", action="append", choices=ABLATION_VARIANTS,
                   default=None, help="repeatable; default: all variants")
    p.add_argument("--split", choices=("train", "valid", "test"),
                   default="test")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("ablate-fusion",
                       help="compare distillation vs feature fusion")
    _add_common(p)
    p.add_argument("--strategy", action="append", choices=FUSION_STRATEGIES,
                   default=None, help="repeatable; default: all strategies")
    p.add_argument("--split", choices=("train", "valid", "test"),
                   default="test")
    p.set_defaults(func=cmd_ablate_fusion)

    p = sub.add_parser("sweep", help="grid sweep over temperature or fanouts")
    _add_common(p)
    p.add_argument("--strategy", action="append",
                   choices=("temperature", "fanouts"), default=None,
                   help="sweep axis (default: temperature)")
    p.add_argument("--split", choices=("train", "valid", "test"),
                   default="test")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StkdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
