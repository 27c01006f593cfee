"""Command-line surface: convert, validate, stats, score, augment, train,
predict, mix-plan, and report.

Exit codes: 0 ok, 1 usage, 2 data error, 3 internal. Errors are emitted as
one JSON object per line on stderr for pipeline composability. Every
mutating command writes a run manifest next to its primary output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from corefkit import __version__
from corefkit.augment import (
    apply_plan,
    build_plan,
    harvest_scores,
    read_plan,
    train_mention_detector,
    write_plan,
)
from corefkit.corpus import Corpus, corpus_stats, validate_corpus
from corefkit.engine import ClusteringConfig
from corefkit.formats.conll import parse_conll, serialize_conll
from corefkit.formats.jsonl import read_jsonl, write_jsonl
from corefkit.formats.profiles import load_profile
from corefkit.learning.model import ModelConfig, ScoringModel
from corefkit.learning.params import (
    build_vocabulary,
    config_hash,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from corefkit.learning.training import TrainConfig, evaluate_model, train, write_history_csv
from corefkit.metrics.core import MetricReport, score_documents
from corefkit.metrics.tasks import (
    choice_accuracy,
    pair_f1,
    read_choice_tasks,
    read_pair_tasks,
)
from corefkit.mixer import MixEntry, MixSpec, build_epoch, stream
from corefkit.report import (
    build_table,
    load_runs,
    render_figure,
    render_text,
    render_training_curves,
    table_to_dict,
    write_tsv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageExit(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("usage", message)
        raise SystemExit(EXIT_USAGE)


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_hash: str
    seeds: list[int]
    inputs: list[str]
    outputs: list[str]
    toolkit_version: str
    wall_clock_s: float


def write_manifest(path, manifest: RunManifest) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write("\n")


def read_manifest(path) -> RunManifest:
    with open(path, encoding="utf-8") as f:
        return RunManifest(**json.load(f))


def _make_manifest(command, config, seeds, inputs, outputs, started) -> RunManifest:
    return RunManifest(
        command=command,
        config_hash=config_hash(config),
        seeds=list(seeds),
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        toolkit_version=__version__,
        wall_clock_s=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# corpus loading helpers
# ---------------------------------------------------------------------------


def _read_corpus(path: str, fmt: str, profile, split: str = "test") -> Corpus:
    if fmt == "conll":
        with open(path, encoding="utf-8") as f:
            return parse_conll(f, profile, split=split)
    return read_jsonl(path, profile, split=split)


def _write_corpus(corpus: Corpus, path: str, fmt: str) -> None:
    if fmt == "conll":
        Path(path).write_text(serialize_conll(corpus), encoding="utf-8")
    else:
        write_jsonl(corpus, path)


def _load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _model_config(data: dict) -> ModelConfig:
    return ModelConfig(
        embedding_dim=int(data.get("embedding_dim", 32)),
        hidden_dim=int(data.get("hidden_dim", 64)),
        feature_dim=int(data.get("feature_dim", 8)),
        use_genre=bool(data.get("use_genre", False)),
        genre_labels=tuple(data.get("genre_labels", ())),
    )


def _train_config(data: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        steps=int(data.get("steps", 100_000)),
        eval_every=int(data.get("eval_every", 5_000)),
        patience=int(data.get("patience", 5)),
        lr_encoder=float(data.get("lr_encoder", 1e-5)),
        lr_rest=float(data.get("lr_rest", 3e-4)),
        weight_decay=float(data.get("weight_decay", 0.01)),
        seed=seed,
        use_speaker_tokens=bool(data.get("use_speaker_tokens", False)),
    )


def _cluster_config(data: dict, **overrides) -> ClusteringConfig:
    return ClusteringConfig(
        max_mention_len=int(data.get("max_mention_len", 20)),
        top_k_ratio=float(data.get("top_k_ratio", 0.4)),
        **overrides,
    )


def _load_mix_entries(entries: Sequence[dict], split: str = "train") -> list[MixEntry]:
    out = []
    for entry in entries:
        profile = load_profile(entry["profile"])
        corpus = read_jsonl(entry["path"], profile, split=split)
        out.append(MixEntry(corpus=corpus, per_epoch_cap=entry.get("cap")))
    return out


def _training_vocabulary(corpora, use_speaker_tokens: bool):
    if not use_speaker_tokens:
        return build_vocabulary(corpora)
    from corefkit.formats.speakers import inject_speaker_tokens

    transformed = []
    for corpus in corpora:
        docs = [
            inject_speaker_tokens(d).doc if d.speakers is not None else d
            for d in corpus.documents
        ]
        transformed.append(Corpus(corpus.profile, tuple(docs), corpus.split))
    return build_vocabulary(transformed)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_convert(args) -> int:
    started = time.perf_counter()
    profile = load_profile(args.profile)
    corpus = _read_corpus(args.input, getattr(args, "from"), profile, args.split)
    _write_corpus(corpus, args.output, args.to)
    manifest = _make_manifest(
        "convert",
        {"from": getattr(args, "from"), "to": args.to, "profile": args.profile},
        seeds=[],
        inputs=[args.input, args.profile],
        outputs=[args.output],
        started=started,
    )
    write_manifest(f"{args.output}.manifest.json", manifest)
    return EXIT_OK


def cmd_validate(args) -> int:
    profile = load_profile(args.profile)
    corpus = _read_corpus(args.corpus, args.format, profile)
    violations = validate_corpus(corpus)
    for violation in violations:
        print(str(violation))
    if violations:
        _emit_error("validation", f"{len(violations)} invariant violations")
        return EXIT_DATA
    print(f"{len(corpus.documents)} documents valid")
    return EXIT_OK


def cmd_stats(args) -> int:
    profile = load_profile(args.profile)
    corpus = _read_corpus(args.corpus, args.format, profile)
    record = corpus_stats(corpus)
    if args.json:
        print(json.dumps(record.as_dict(), indent=2))
    else:
        for key, value in record.as_dict().items():
            print(f"{key}: {value}")
    return EXIT_OK


def _format_report_text(report: MetricReport) -> str:
    rows = [
        ("muc", report.muc),
        ("b3", report.b3),
        ("ceafe", report.ceafe),
        ("mention", report.mention),
    ]
    lines = [f"{'metric':10}  {'precision':>22}  {'recall':>22}  {'f1':>22}"]
    for name, prf in rows:
        lines.append(
            f"{name:10}  {prf.precision!r:>22}  {prf.recall!r:>22}  {prf.f1!r:>22}"
        )
    lines.append(f"{'conll_f1':10}  {report.conll_f1!r}")
    if report.singleton_split is not None:
        split = report.singleton_split
        lines.append(f"{'singleton_f1':14}  {split.singleton_f1!r}")
        lines.append(f"{'non_singleton_conll_f1':24}  {split.non_singleton_conll_f1!r}")
    if report.singleton_policy_applied:
        lines.append("note: predicted singletons removed per dataset policy")
    return "\n".join(lines) + "\n"


def cmd_score(args) -> int:
    profile = load_profile(args.profile)
    pred = read_jsonl(args.pred, profile)

    if args.task:
        if args.task == "pair":
            tasks = read_pair_tasks(args.gold)
            prf = pair_f1(tasks, pred)
            payload = {"task": "pair", **prf.as_dict()}
            text = f"pair_f1  {prf.f1!r}  (precision {prf.precision!r}, recall {prf.recall!r})\n"
        else:
            tasks = read_choice_tasks(args.gold)
            accuracy = choice_accuracy(tasks, pred)
            payload = {"task": "choice", "accuracy": accuracy, "tasks": len(tasks)}
            text = f"choice_accuracy  {accuracy!r}  over {len(tasks)} tasks\n"
    else:
        gold = read_jsonl(args.gold, profile)
        report = score_documents(
            gold.documents,
            pred.documents,
            annotates_singletons=profile.annotates_singletons,
            split_singletons=args.split_singletons,
        )
        payload = report.as_dict()
        text = _format_report_text(report)

    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    if args.json:
        print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.perf_counter()
    config = _load_config_file(args.config)
    seed = int(config.get("seed", 0))
    model_cfg = _model_config(config.get("model", {}))
    train_cfg = _train_config(config.get("train", {}), seed)
    cluster_cfg = _cluster_config(config.get("clustering", {}))

    data = config.get("data", {})
    entries = _load_mix_entries(data.get("train", []))
    if not entries:
        raise ValueError("train config lists no training corpora")
    dev_corpora = [
        read_jsonl(d["path"], load_profile(d["profile"]), split="dev")
        for d in data.get("dev", [])
    ]
    spec = MixSpec(entries=tuple(entries), seed=seed)
    vocab = _training_vocabulary(
        [e.corpus for e in entries], train_cfg.use_speaker_tokens
    )
    store = init_parameters(len(vocab), model_cfg, seed)
    model = ScoringModel(store, model_cfg, vocab)

    result = train(
        stream(spec, train_cfg.steps), model, dev_corpora, train_cfg, cluster_cfg
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / "checkpoint.npz"
    save_checkpoint(
        checkpoint_path,
        result.store,
        vocab,
        model_cfg.as_dict(),
        extra={
            "train": train_cfg.as_dict(),
            "clustering": {
                "max_mention_len": cluster_cfg.max_mention_len,
                "top_k_ratio": cluster_cfg.top_k_ratio,
            },
            "best_step": result.best_step,
            "best_score": result.best_score,
        },
    )
    write_history_csv(result.history, out_dir / "history.csv")
    render_training_curves(result.history, out_dir / "loss_curve.png")

    if dev_corpora:
        best_model = ScoringModel(result.store, model_cfg, vocab)
        scores = {}
        for corpus in dev_corpora:
            scores[corpus.profile.name] = 100.0 * evaluate_model(
                best_model, [corpus], cluster_cfg, train_cfg.use_speaker_tokens
            )
        with open(out_dir / "run_scores.json", "w", encoding="utf-8") as f:
            json.dump(
                {"model": config.get("name", "model"), "scores": scores}, f, indent=2
            )
            f.write("\n")

    manifest = _make_manifest(
        "train",
        config,
        seeds=[seed],
        inputs=[args.config],
        outputs=[str(checkpoint_path)],
        started=started,
    )
    write_manifest(out_dir / "manifest.json", manifest)
    print(
        json.dumps(
            {
                "steps_run": result.steps_run,
                "best_step": result.best_step,
                "best_score": result.best_score,
                "stopped_early": result.stopped_early,
            }
        )
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    started = time.perf_counter()
    store, vocab, meta, _ = load_checkpoint(args.checkpoint)
    model_cfg = ModelConfig.from_dict(meta["model_config"])
    model = ScoringModel(store, model_cfg, vocab)
    extra = meta.get("extra", {})
    clustering = extra.get("clustering", {})
    cluster_cfg = ClusteringConfig(
        max_mention_len=int(clustering.get("max_mention_len", 20)),
        top_k_ratio=float(clustering.get("top_k_ratio", 0.4)),
        gold_mention_mode=args.gold_mentions,
    )
    use_speakers = bool(extra.get("train", {}).get("use_speaker_tokens", False))

    profile = load_profile(args.profile)
    corpus = read_jsonl(args.input, profile)
    predictions = [
        model.predict(doc, cluster_cfg, use_speakers) for doc in corpus.documents
    ]
    write_jsonl(
        Corpus(profile=profile, documents=tuple(predictions), split=corpus.split),
        args.output,
    )
    manifest = _make_manifest(
        "predict",
        {
            "checkpoint": args.checkpoint,
            "gold_mentions": args.gold_mentions,
            "config_hash": meta.get("config_hash"),
        },
        seeds=[],
        inputs=[args.checkpoint, args.input, args.profile],
        outputs=[args.output],
        started=started,
    )
    write_manifest(f"{args.output}.manifest.json", manifest)
    return EXIT_OK


def cmd_augment(args) -> int:
    started = time.perf_counter()
    config = _load_config_file(args.config) if args.config else {}
    seed = int(config.get("seed", 0))
    profile = load_profile(args.profile)
    corpus = read_jsonl(args.corpus, profile, split="train")

    model_cfg = _model_config(config.get("model", {}))
    train_cfg = _train_config(config.get("train", {}), seed)
    cluster_cfg = _cluster_config(config.get("clustering", {}))

    detector = train_mention_detector(corpus, train_cfg, model_cfg, cluster_cfg)
    table = harvest_scores(corpus, detector, cluster_cfg)
    plan = build_plan(table, args.n, seed)
    write_plan(plan, args.out_plan)

    outputs = [args.out_plan]
    if args.out_corpus:
        augmented = apply_plan(corpus, plan)
        write_jsonl(augmented, args.out_corpus)
        outputs.append(args.out_corpus)

    manifest = _make_manifest(
        "augment",
        {"n": args.n, "config": config},
        seeds=[seed],
        inputs=[args.corpus, args.profile],
        outputs=outputs,
        started=started,
    )
    write_manifest(f"{args.out_plan}.manifest.json", manifest)
    print(json.dumps({"plan_size": len(plan), "requested": args.n}))
    return EXIT_OK


def cmd_apply_plan(args) -> int:
    started = time.perf_counter()
    profile = load_profile(args.profile)
    corpus = read_jsonl(args.corpus, profile, split="train")
    plan = read_plan(args.plan)
    augmented = apply_plan(corpus, plan)
    write_jsonl(augmented, args.output)
    manifest = _make_manifest(
        "apply-plan",
        {"plan": args.plan},
        seeds=[],
        inputs=[args.corpus, args.plan],
        outputs=[args.output],
        started=started,
    )
    write_manifest(f"{args.output}.manifest.json", manifest)
    return EXIT_OK


def cmd_mix_plan(args) -> int:
    started = time.perf_counter()
    config = _load_config_file(args.config)
    seed = int(config.get("seed", 0))
    entries = _load_mix_entries(config.get("entries", []))
    spec = MixSpec(entries=tuple(entries), seed=seed)
    with open(args.output, "w", encoding="utf-8") as f:
        for epoch_index in range(args.epochs):
            plan = build_epoch(spec, epoch_index)
            f.write(
                json.dumps(
                    {"epoch": epoch_index, "items": [list(i) for i in plan.items]}
                )
                + "\n"
            )
    manifest = _make_manifest(
        "mix-plan",
        config,
        seeds=[seed],
        inputs=[args.config],
        outputs=[args.output],
        started=started,
    )
    write_manifest(f"{args.output}.manifest.json", manifest)
    return EXIT_OK


def cmd_report(args) -> int:
    started = time.perf_counter()
    runs = load_runs(args.runs)
    table = build_table(runs)
    text = render_text(table)
    print(text, end="")

    out_dir = Path(args.out_dir) if args.out_dir else None
    outputs = []
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(text, encoding="utf-8")
        with open(out_dir / "report.json", "w", encoding="utf-8") as f:
            json.dump(table_to_dict(table), f, indent=2)
            f.write("\n")
        write_tsv(table, out_dir / "report.tsv")
        render_figure(table, out_dir / "report.png")
        outputs = [
            str(out_dir / name)
            for name in ("report.txt", "report.json", "report.tsv", "report.png")
        ]
        manifest = _make_manifest(
            "report",
            {"runs": args.runs},
            seeds=[],
            inputs=[args.runs],
            outputs=outputs,
            started=started,
        )
        write_manifest(out_dir / "manifest.json", manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corefkit", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between conll and jsonl")
    p.add_argument("--from", dest="from", choices=["conll", "jsonl"], required=True)
    p.add_argument("--to", choices=["conll", "jsonl"], required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="check corpus invariants")
    p.add_argument("--profile", required=True)
    p.add_argument("--format", choices=["conll", "jsonl"], default="jsonl")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--profile", required=True)
    p.add_argument("--format", choices=["conll", "jsonl"], default="jsonl")
    p.add_argument("--json", action="store_true")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--split-singletons", action="store_true")
    p.add_argument("--task", choices=["pair", "choice"])
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the resolver")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict clusters with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--gold-mentions", action="store_true")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("augment", help="build a pseudo-singleton plan")
    p.add_argument("--corpus", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--out-plan", required=True)
    p.add_argument("--out-corpus")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("apply-plan", help="apply a pseudo-singleton plan")
    p.add_argument("--corpus", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_apply_plan)

    p = sub.add_parser("mix-plan", help="write per-epoch sampling plans")
    p.add_argument("--config", required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_mix_plan)

    p = sub.add_parser("report", help="benchmark table across runs")
    p.add_argument("--runs", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, NotADirectoryError) as e:
        _emit_error("data", str(e))
        return EXIT_DATA
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        _emit_error("data", str(e))
        return EXIT_DATA
    except Exception as e:  # pragma: no cover - defensive
        _emit_error("internal", f"{type(e).__name__}: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
