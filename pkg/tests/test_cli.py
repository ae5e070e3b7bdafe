import json
from pathlib import Path

import pytest

from smscreen.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from smscreen.corpus import save_corpus
from smscreen.labels import CLASS_LABELS, ClassLabel
from smscreen.pipeline import BalancePlan
from smscreen.synthetic import synthetic_corpus

SIZES = {c: 14 for c in CLASS_LABELS}


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    path = root / "corpus.jsonl"
    save_corpus(synthetic_corpus(SIZES, seed=31), path)
    return path


@pytest.fixture(scope="module")
def plan_file(tmp_path_factory):
    root = tmp_path_factory.mktemp("plan")
    path = root / "plan.cfg"
    BalancePlan(
        caps={c: 8 for c in CLASS_LABELS}, targets={c: 10 for c in CLASS_LABELS}, seed=0
    ).save(path)
    return path


@pytest.fixture(scope="module")
def prepared_dir(tmp_path_factory, corpus_file, plan_file):
    out = tmp_path_factory.mktemp("prepared")
    code = main([
        "prepare", "--in", str(corpus_file), "--plan", str(plan_file),
        "--out-dir", str(out), "--seed", "7", "--max-features", "400",
    ])
    assert code == EXIT_OK
    return out


@pytest.fixture(scope="module")
def model_file(tmp_path_factory, prepared_dir):
    out = tmp_path_factory.mktemp("model") / "model.json"
    code = main([
        "train", "--model", "logreg", "--train", str(prepared_dir / "train.jsonl"),
        "--vectorizer", str(prepared_dir / "vectorizer.json"),
        "--out", str(out), "--seed", "7", "--folds", "3",
    ])
    assert code == EXIT_OK
    return out


def artifact_digests(directory: Path) -> dict:
    import hashlib

    out = {}
    for p in sorted(directory.iterdir()):
        if p.name == "run_manifest.json":
            continue
        out[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


class TestIngest:
    def test_happy_path(self, tmp_path, corpus_file):
        out = tmp_path / "normalized.jsonl"
        assert main(["ingest", "--in", str(corpus_file), "--out", str(out)]) == EXIT_OK
        assert out.exists()
        assert (tmp_path / "run_manifest.json").exists()

    def test_unknown_label_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"text": "x", "label": "depresion"}\n')
        assert main(["ingest", "--in", str(bad), "--out", str(tmp_path / "o.jsonl")]) == EXIT_DATA

    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["ingest", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")]) == EXIT_DATA


class TestUsageErrors:
    def test_train_without_required_flag(self):
        assert main(["train", "--model", "logreg"]) == EXIT_USAGE

    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_help_exits_zero(self):
        assert main(["--help"]) == EXIT_OK


class TestPrepare:
    def test_outputs_exist(self, prepared_dir):
        for name in (
            "train.jsonl", "train_unbalanced.jsonl", "test.jsonl",
            "balance_report.csv", "balance_report.txt", "vectorizer.json",
            "plan.cfg", "run_manifest.json",
        ):
            assert (prepared_dir / name).exists()

    def test_report_mirrors_pipeline_stages(self, prepared_dir):
        lines = (prepared_dir / "balance_report.csv").read_text().strip().splitlines()
        assert lines[0] == "class,before_ds,after_ds,after_eda_dd,test"
        assert len(lines) == 11
        for line in lines[1:]:
            _, before, after_ds, after_eda, test = line.split(",")
            assert int(after_ds) <= 8
            assert int(after_ds) <= int(after_eda) <= 10
            assert int(before) + int(test) == 14  # split preserves totals per class

    def test_manifest_digests_verify(self, prepared_dir):
        import hashlib

        manifest = json.loads((prepared_dir / "run_manifest.json").read_text())
        for path_str, digest in manifest["outputs"].items():
            assert hashlib.sha256(Path(path_str).read_bytes()).hexdigest() == digest

    def test_rerun_is_byte_identical(self, tmp_path, corpus_file, plan_file, prepared_dir):
        out2 = tmp_path / "again"
        code = main([
            "prepare", "--in", str(corpus_file), "--plan", str(plan_file),
            "--out-dir", str(out2), "--seed", "7", "--max-features", "400",
        ])
        assert code == EXIT_OK
        assert artifact_digests(prepared_dir) == artifact_digests(out2)


class TestTrainEvaluate:
    def test_train_writes_model(self, model_file):
        obj = json.loads(model_file.read_text())
        assert obj["kind"] == "multinomial_logistic"
        assert len(obj["classes"]) == 10

    def test_evaluate_writes_reports(self, tmp_path, prepared_dir, model_file):
        out = tmp_path / "eval"
        code = main([
            "evaluate", "--test", str(prepared_dir / "test.jsonl"),
            "--model", str(model_file),
            "--vectorizer", str(prepared_dir / "vectorizer.json"),
            "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert 0 <= report["macro_f1"] <= 1
        assert (out / "confusion.csv").exists()
        assert (out / "calibration.csv").exists()
        assert (out / "pr_curve.csv").exists()

    def test_evaluate_deterministic(self, tmp_path, prepared_dir, model_file):
        outs = []
        for name in ("e1", "e2"):
            out = tmp_path / name
            main([
                "evaluate", "--test", str(prepared_dir / "test.jsonl"),
                "--model", str(model_file),
                "--vectorizer", str(prepared_dir / "vectorizer.json"),
                "--out-dir", str(out),
            ])
            outs.append(artifact_digests(out))
        assert outs[0] == outs[1]

    def test_evaluate_prediction_file(self, tmp_path, prepared_dir):
        test_corpus = (prepared_dir / "test.jsonl").read_text().strip().splitlines()
        rows = ["id,pred_label"]
        for line in test_corpus:
            obj = json.loads(line)
            rows.append(f"{obj['id']},{obj['label']}")
        preds = tmp_path / "preds.csv"
        preds.write_text("\n".join(rows) + "\n")
        out = tmp_path / "eval_ext"
        code = main([
            "evaluate", "--test", str(prepared_dir / "test.jsonl"),
            "--predictions", str(preds), "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["accuracy"] == 1.0

    def test_missing_artifacts_is_data_error(self, tmp_path, prepared_dir):
        code = main([
            "evaluate", "--test", str(prepared_dir / "test.jsonl"),
            "--out-dir", str(tmp_path / "x"),
        ])
        assert code == EXIT_DATA


class TestAnalyze:
    def test_outputs(self, tmp_path, prepared_dir):
        out = tmp_path / "analysis"
        code = main([
            "analyze", "--corpus", str(prepared_dir / "train.jsonl"),
            "--vectorizer", str(prepared_dir / "vectorizer.json"),
            "--top-k", "5", "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        top = (out / "top_terms.csv").read_text().strip().splitlines()
        assert top[0] == "class,rank,term,mean_tfidf"
        assert all("," in line for line in top[1:])
        # report view is unigrams only
        assert all(" " not in line.split(",")[2] for line in top[1:])
        corr = (out / "class_correlation.csv").read_text().strip().splitlines()
        assert len(corr) == 11


class TestExplainCommand:
    def test_prints_explanation_json(self, capsys, prepared_dir, model_file):
        code = main([
            "explain", "--model", str(model_file),
            "--vectorizer", str(prepared_dir / "vectorizer.json"),
            "--text", "bullied at school by classmates",
        ])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["disclaimer"] == "This is not a clinical diagnosis."
        assert out["narrative_source"] == "template_fallback"
        assert out["predicted"] in {c.value for c in CLASS_LABELS}


class TestAblation:
    def test_delta_report(self, tmp_path, prepared_dir):
        out = tmp_path / "ablation"
        code = main([
            "ablation", "--prepared-dir", str(prepared_dir), "--model", "logreg",
            "--folds", "3", "--max-features", "400", "--seed", "7",
            "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        delta = json.loads((out / "ablation.json").read_text())
        assert {"balanced", "unbalanced", "delta"} <= set(delta)
        # recomputation oracle: the delta must equal the two stored reports
        balanced = json.loads((out / "report_balanced.json").read_text())
        unbalanced = json.loads((out / "report_unbalanced.json").read_text())
        assert delta["delta"]["macro_f1"] == pytest.approx(
            balanced["macro_f1"] - unbalanced["macro_f1"], abs=1e-12
        )
        assert delta["delta"]["accuracy"] == pytest.approx(
            balanced["accuracy"] - unbalanced["accuracy"], abs=1e-12
        )

    def test_missing_prepared_dir_is_data_error(self, tmp_path):
        code = main([
            "ablation", "--prepared-dir", str(tmp_path / "nothing"),
            "--out-dir", str(tmp_path / "out"),
        ])
        assert code == EXIT_DATA


class TestZeroshotCommand:
    def test_requires_enabled_llm(self, tmp_path, prepared_dir):
        cfg = tmp_path / "svc.cfg"
        cfg.write_text("llm.enabled = false\n")
        code = main([
            "zeroshot", "--test", str(prepared_dir / "test.jsonl"),
            "--config", str(cfg), "--out-dir", str(tmp_path / "zs"),
        ])
        assert code == EXIT_DATA

    def test_batch_with_stub(self, tmp_path, prepared_dir):
        from llm_stub import StubLlmServer

        with StubLlmServer(reply="anxiety") as stub:
            cfg = tmp_path / "svc.cfg"
            cfg.write_text(
                f"llm.enabled = true\nllm.endpoint = {stub.endpoint}\nllm.model_name = stub\n"
            )
            out = tmp_path / "zs"
            code = main([
                "zeroshot", "--test", str(prepared_dir / "test.jsonl"),
                "--config", str(cfg), "--limit", "6", "--out-dir", str(out),
            ])
        assert code == EXIT_OK
        summary = json.loads((out / "zeroshot_report.json").read_text())
        assert summary["total"] == 6
        assert summary["mapped"] == 6
        assert summary["unmapped_fraction"] == 0.0
