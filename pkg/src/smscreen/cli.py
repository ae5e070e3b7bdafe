"""Command-line entry point for the full reproduction workflow.

Subcommands: ingest, prepare, train, evaluate, analyze, explain, zeroshot,
ablation, serve. Every artifact-producing run writes a run_manifest.json with
input/output digests so reruns can be checked for byte-identical results.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .corpus import Corpus, CorpusFormatError, deduplicate, load_corpus, save_corpus
from .features import TfidfModel, class_correlation, class_profiles, fit_tfidf
from .labels import CLASS_LABELS, ClassLabel, UnknownLabelError, parse_label
from .metrics import (
    EvalReport,
    calibration,
    calibration_to_csv,
    confusion,
    confusion_to_csv,
    auprc,
    precision_recall_curve,
    pr_curve_to_csv,
    render_report_text,
    report,
    score_prediction_file,
)
from .models import KIND_LOGREG, LinearClassifier, train_logreg, train_svm
from .pipeline import (
    BalancePlan,
    SynonymLexicon,
    balance,
    balance_report,
    downsample,
    report_to_csv,
    report_to_text,
    stratified_split,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class DataError(Exception):
    """Invalid input data or artifacts; maps to exit code 2."""


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class ManifestWriter:
    def __init__(self, command: str, args: dict, seed: Optional[int] = None):
        self.started_at = _utcnow()
        self.command = command
        self.args = args
        self.seed = seed
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}

    def add_input(self, path: str | Path) -> None:
        p = Path(path)
        self.inputs[str(p)] = _digest(p)

    def add_output(self, path: str | Path) -> None:
        p = Path(path)
        self.outputs[str(p)] = _digest(p)

    def write(self, out_dir: str | Path) -> None:
        manifest = {
            "tool_version": __version__,
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started_at": self.started_at,
            "finished_at": _utcnow(),
        }
        path = Path(out_dir) / "run_manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def _load_corpus_checked(path: str, fmt: Optional[str] = None) -> Corpus:
    try:
        return load_corpus(path, fmt)
    except FileNotFoundError as e:
        raise DataError(str(e)) from e
    except CorpusFormatError as e:
        raise DataError(str(e)) from e


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = _load_corpus_checked(args.infile, args.format)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out)
    manifest = ManifestWriter("ingest", {"in": args.infile, "out": args.out})
    manifest.add_input(Path(args.infile))
    manifest.add_output(out)
    manifest.write(out.parent)
    print(f"ingested {len(corpus)} posts -> {out}")
    return EXIT_OK


def cmd_prepare(args: argparse.Namespace) -> int:
    corpus = _load_corpus_checked(args.infile)
    plan = BalancePlan.load(args.plan) if args.plan else BalancePlan()
    plan.seed = args.seed  # all randomness flows from --seed
    lex = SynonymLexicon.from_file(args.lexicon) if args.lexicon else SynonymLexicon.bundled()

    deduped = deduplicate(corpus)
    try:
        split = stratified_split(deduped, args.ratio, args.seed)
    except ValueError as e:
        raise DataError(str(e)) from e
    after_ds = downsample(split.train_pool, plan)
    balanced = balance(split.train_pool, plan, lex)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(split.train_pool, out_dir / "train_unbalanced.jsonl")
    save_corpus(balanced, out_dir / "train.jsonl")
    save_corpus(split.test_pool, out_dir / "test.jsonl")
    rows = balance_report(split.train_pool, after_ds, balanced, split.test_pool)
    _write(out_dir / "balance_report.csv", report_to_csv(rows))
    _write(out_dir / "balance_report.txt", report_to_text(rows))

    vec = fit_tfidf(balanced, max_features=args.max_features)
    vec.save(out_dir / "vectorizer.json")
    plan.save(out_dir / "plan.cfg")

    manifest = ManifestWriter(
        "prepare",
        {"in": args.infile, "out_dir": args.out_dir, "ratio": args.ratio, "max_features": args.max_features},
        seed=args.seed,
    )
    manifest.add_input(Path(args.infile))
    for name in ("train.jsonl", "train_unbalanced.jsonl", "test.jsonl", "balance_report.csv",
                 "balance_report.txt", "vectorizer.json", "plan.cfg"):
        manifest.add_output(out_dir / name)
    manifest.write(out_dir)
    print(report_to_text(rows))
    print(f"prepared artifacts in {out_dir}")
    return EXIT_OK


def _vectorize_corpus(vec: TfidfModel, corpus: Corpus):
    X = [vec.transform(p.clean_text) for p in corpus]
    y = [p.label for p in corpus]
    return X, y


def cmd_train(args: argparse.Namespace) -> int:
    corpus = _load_corpus_checked(args.train)
    try:
        vec = TfidfModel.load(args.vectorizer)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot load vectorizer: {e}") from e
    X, y = _vectorize_corpus(vec, corpus)
    c_grid = [float(c) for c in args.c_grid.split(",")] if args.c_grid else None
    try:
        if args.model == "logreg":
            model = train_logreg(
                X, y, C_grid=c_grid or (0.1, 1.0, 10.0), folds=args.folds,
                seed=args.seed, n_features=vec.n_features,
            )
        else:
            model = train_svm(
                X, y, C_grid=c_grid or (0.01, 0.1, 1.0, 10.0), folds=args.folds,
                seed=args.seed, n_features=vec.n_features,
            )
    except ValueError as e:
        raise DataError(str(e)) from e
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    manifest = ManifestWriter(
        "train", {"model": args.model, "train": args.train, "vectorizer": args.vectorizer, "out": args.out},
        seed=args.seed,
    )
    manifest.add_input(Path(args.train))
    manifest.add_input(Path(args.vectorizer))
    manifest.add_output(out)
    manifest.write(out.parent)
    print(f"trained {args.model} (C={model.chosen_C}) -> {out}")
    return EXIT_OK


def _evaluate_model(model: LinearClassifier, vec: TfidfModel, test: Corpus):
    y_true = [p.label for p in test]
    y_pred = []
    suicide_pairs = []
    suicide_probs = []
    suicide_truth = []
    for p in test:
        x = vec.transform(p.clean_text)
        y_pred.append(model.predict(x))
        if model.kind == KIND_LOGREG:
            probs = model.predict_proba(x)
            p_suicide = float(probs[model.classes.index(ClassLabel.SUICIDE)]) \
                if ClassLabel.SUICIDE in model.classes else 0.0
            positive = p.label == ClassLabel.SUICIDE
            suicide_pairs.append((p_suicide, positive))
            suicide_probs.append(p_suicide)
            suicide_truth.append(positive)
    cm = confusion(y_true, y_pred, classes=model.classes)
    rep = report(cm)
    extras = {}
    if suicide_pairs and 0 < sum(suicide_truth) < len(suicide_truth):
        extras["suicide_auprc"] = auprc(suicide_pairs)
        extras["pr_curve"] = precision_recall_curve(suicide_pairs)
        extras["calibration"] = calibration(suicide_probs, suicide_truth)
    return cm, rep, extras


def _write_eval_outputs(out_dir: Path, cm, rep: EvalReport, extras: dict) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    report_obj = rep.to_dict()
    if "suicide_auprc" in extras:
        report_obj["suicide_auprc"] = extras["suicide_auprc"]
    _write(out_dir / "report.json", json.dumps(report_obj, indent=2, sort_keys=True) + "\n")
    _write(out_dir / "report.txt", render_report_text(rep))
    _write(out_dir / "confusion.csv", confusion_to_csv(cm))
    written += [out_dir / "report.json", out_dir / "report.txt", out_dir / "confusion.csv"]
    if "calibration" in extras:
        _write(out_dir / "calibration.csv", calibration_to_csv(extras["calibration"]))
        written.append(out_dir / "calibration.csv")
    if "pr_curve" in extras:
        _write(out_dir / "pr_curve.csv", pr_curve_to_csv(extras["pr_curve"]))
        written.append(out_dir / "pr_curve.csv")
    return written


def cmd_evaluate(args: argparse.Namespace) -> int:
    test = _load_corpus_checked(args.test)
    out_dir = Path(args.out_dir)
    if args.predictions:
        try:
            scored = score_prediction_file(test, args.predictions)
        except (ValueError, UnknownLabelError) as e:
            raise DataError(str(e)) from e
        extras = {}
        if scored.suicide_auprc is not None:
            extras["suicide_auprc"] = scored.suicide_auprc
        if scored.calibration is not None:
            extras["calibration"] = scored.calibration
        if scored.pr_curve is not None:
            extras["pr_curve"] = scored.pr_curve
        written = _write_eval_outputs(out_dir, scored.confusion, scored.report, extras)
        manifest = ManifestWriter("evaluate", {"test": args.test, "predictions": args.predictions})
        manifest.add_input(Path(args.test))
        manifest.add_input(Path(args.predictions))
    else:
        if not args.model or not args.vectorizer:
            raise DataError("evaluate needs either --predictions or both --model and --vectorizer")
        try:
            model = LinearClassifier.load(args.model)
            vec = TfidfModel.load(args.vectorizer)
        except (OSError, ValueError, KeyError) as e:
            raise DataError(f"cannot load artifacts: {e}") from e
        cm, rep, extras = _evaluate_model(model, vec, test)
        written = _write_eval_outputs(out_dir, cm, rep, extras)
        manifest = ManifestWriter(
            "evaluate", {"test": args.test, "model": args.model, "vectorizer": args.vectorizer}
        )
        manifest.add_input(Path(args.test))
        manifest.add_input(Path(args.model))
        manifest.add_input(Path(args.vectorizer))
    for path in written:
        manifest.add_output(path)
    manifest.write(out_dir)
    print((out_dir / "report.txt").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    corpus = _load_corpus_checked(args.corpus)
    try:
        vec = TfidfModel.load(args.vectorizer)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot load vectorizer: {e}") from e
    try:
        profiles = class_profiles(vec, corpus, k=args.top_k, unigrams_only=True)
    except ValueError as e:
        raise DataError(str(e)) from e
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["class,rank,term,mean_tfidf"]
    for prof in profiles:
        for rank, (term, weight) in enumerate(prof.top_terms, start=1):
            lines.append(f"{prof.label.value},{rank},{term},{weight}")
    _write(out_dir / "top_terms.csv", "\n".join(lines) + "\n")

    corr = class_correlation(profiles)
    header = "class," + ",".join(l.value for l in corr.labels)
    rows = [header]
    for i, label in enumerate(corr.labels):
        rows.append(label.value + "," + ",".join(f"{v}" for v in corr.matrix[i]))
    _write(out_dir / "class_correlation.csv", "\n".join(rows) + "\n")

    manifest = ManifestWriter("analyze", {"corpus": args.corpus, "vectorizer": args.vectorizer, "top_k": args.top_k})
    manifest.add_input(Path(args.corpus))
    manifest.add_input(Path(args.vectorizer))
    manifest.add_output(out_dir / "top_terms.csv")
    manifest.add_output(out_dir / "class_correlation.csv")
    manifest.write(out_dir)
    print(f"analysis written to {out_dir}")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    from .corpus import LabeledPost
    from .explain import explain_post
    from .service import ServiceConfig

    try:
        model = LinearClassifier.load(args.model)
        vec = TfidfModel.load(args.vectorizer)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot load artifacts: {e}") from e
    client = None
    if args.config:
        client = ServiceConfig.from_file(args.config).build_llm_client()
    post = LabeledPost.make(args.text, ClassLabel.NON_SUICIDE)
    if not post.clean_text:
        raise DataError("text is empty after normalization")
    result = explain_post(model, vec, post, client=client)
    out = {
        "predicted": result.predicted.value,
        "confidence": result.confidence,
        "highlights": [
            {"token": h.token, "positions": list(h.occurrences), "contribution": h.contribution}
            for h in result.highlights
        ],
        "attributions": [
            {"token": a.token, "positions": list(a.occurrences), "contribution": a.contribution}
            for a in result.attributions
        ],
        "narrative": result.narrative,
        "narrative_source": result.narrative_source,
        "disclaimer": result.disclaimer,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_zeroshot(args: argparse.Namespace) -> int:
    from .explain import LlmTransportError, zero_shot_classify
    from .service import ServiceConfig

    test = _load_corpus_checked(args.test)
    client = ServiceConfig.from_file(args.config).build_llm_client()
    if not client.enabled:
        raise DataError("zero-shot evaluation requires llm.enabled = true in the config")
    posts = list(test)[: args.limit] if args.limit else list(test)
    y_true, y_pred = [], []
    unmapped = []
    for p in posts:
        try:
            result = zero_shot_classify(client, p.clean_text)
        except LlmTransportError as e:
            raise DataError(f"LLM transport failure on post {p.id}: {e}") from e
        if result.mapped:
            y_true.append(p.label)
            y_pred.append(result.label)
        else:
            unmapped.append({"id": p.id, "reply": result.raw_reply})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "total": len(posts),
        "mapped": len(y_pred),
        "unmapped": len(unmapped),
        "unmapped_fraction": len(unmapped) / len(posts) if posts else 0.0,
        "unmapped_replies": unmapped,
    }
    if y_pred:
        rep = report(confusion(y_true, y_pred))
        summary["report"] = rep.to_dict()
    _write(out_dir / "zeroshot_report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"zero-shot: {summary['mapped']}/{summary['total']} mapped "
          f"({summary['unmapped_fraction']:.1%} unmapped) -> {out_dir}")
    return EXIT_OK


def cmd_ablation(args: argparse.Namespace) -> int:
    prepared = Path(args.prepared_dir)
    balanced_path = prepared / "train.jsonl"
    unbalanced_path = prepared / "train_unbalanced.jsonl"
    test_path = prepared / "test.jsonl"
    for p in (balanced_path, unbalanced_path, test_path):
        if not p.exists():
            raise DataError(f"missing prepared artifact: {p} (run `smscreen prepare` first)")

    test = _load_corpus_checked(str(test_path))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variants = {}
    for name, train_path in (("unbalanced", unbalanced_path), ("balanced", balanced_path)):
        corpus = _load_corpus_checked(str(train_path))
        vec = fit_tfidf(corpus, max_features=args.max_features)
        X, y = _vectorize_corpus(vec, corpus)
        trainer = train_logreg if args.model == "logreg" else train_svm
        try:
            model = trainer(X, y, folds=args.folds, seed=args.seed, n_features=vec.n_features)
        except ValueError as e:
            raise DataError(str(e)) from e
        cm, rep, _ = _evaluate_model(model, vec, test)
        variants[name] = rep
        _write(out_dir / f"report_{name}.json", json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")

    delta = {
        "model": args.model,
        "unbalanced": variants["unbalanced"].to_dict(),
        "balanced": variants["balanced"].to_dict(),
        "delta": {
            "accuracy": variants["balanced"].accuracy - variants["unbalanced"].accuracy,
            "macro_f1": variants["balanced"].macro_f1 - variants["unbalanced"].macro_f1,
            "weighted_f1": variants["balanced"].weighted_f1 - variants["unbalanced"].weighted_f1,
            "per_class_f1": {
                c.value: variants["balanced"].per_class[c].f1 - variants["unbalanced"].per_class[c].f1
                for c in variants["balanced"].per_class
                if c in variants["unbalanced"].per_class
            },
        },
    }
    _write(out_dir / "ablation.json", json.dumps(delta, indent=2, sort_keys=True) + "\n")
    manifest = ManifestWriter(
        "ablation", {"prepared_dir": args.prepared_dir, "model": args.model}, seed=args.seed
    )
    for p in (balanced_path, unbalanced_path, test_path):
        manifest.add_input(p)
    for name in ("report_unbalanced.json", "report_balanced.json", "ablation.json"):
        manifest.add_output(out_dir / name)
    manifest.write(out_dir)
    print(
        f"ablation ({args.model}): macro F1 {variants['unbalanced'].macro_f1:.3f} -> "
        f"{variants['balanced'].macro_f1:.3f} "
        f"(delta {delta['delta']['macro_f1']:+.3f})"
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app, service_from_config

    cfg = ServiceConfig.from_file(args.config)
    try:
        service = service_from_config(cfg)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot start service: {e}") from e
    app = create_app(service, static_dir=cfg.static_dir or None)
    uvicorn.run(app, host=args.host, port=cfg.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smscreen", description=__doc__)
    parser.add_argument("--version", action="version", version=f"smscreen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a corpus file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prepare", help="dedup, split, and balance a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--plan", default=None, help="balance plan config (defaults to 2,400-post caps)")
    p.add_argument("--lexicon", default=None, help="synonym lexicon JSON (defaults to bundled)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--max-features", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a lexical baseline model")
    p.add_argument("--model", choices=["logreg", "svm"], required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--vectorizer", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--c-grid", default=None, help="comma-separated C values")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model or an external prediction file")
    p.add_argument("--test", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--vectorizer", default=None)
    p.add_argument("--predictions", default=None, help="external prediction CSV")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="top terms per class and class correlations")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vectorizer", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("explain", help="one-off explanation for a text")
    p.add_argument("--model", required=True)
    p.add_argument("--vectorizer", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--config", default=None, help="service config for LLM narration")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("zeroshot", help="batch zero-shot LLM evaluation")
    p.add_argument("--test", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_zeroshot)

    p = sub.add_parser("ablation", help="compare balanced vs unbalanced training")
    p.add_argument("--prepared-dir", required=True)
    p.add_argument("--model", choices=["logreg", "svm"], default="logreg")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--max-features", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ablation)

    p = sub.add_parser("serve", help="run the screener HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
