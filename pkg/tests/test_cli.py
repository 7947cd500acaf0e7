import pytest

from qseg import corpus
from qseg.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from qseg.features import load_feature_bags


@pytest.fixture
def workdir(tmp_path):
    """Synthesize a small corpus once per test."""
    out = tmp_path / "corpus"
    code = main([
        "synth", "--seed", "3", "--alphabet-size", "10", "--vocab-size", "20",
        "--n-train", "60", "--n-test", "20", "--n-docs", "40",
        "--out-dir", str(out),
    ])
    assert code == EXIT_OK
    return tmp_path


def _train_config(tmp_path, **extra):
    lines = {
        "variant": "q", "lr": "0.01", "batch_size": "8", "max_epochs": "2",
        "d_c": "4", "d_h": "3", "d_d": "2", "d_g": "3",
        "t": "1", "k_max": "3", "context_cap": "2",
    }
    lines.update({k: str(v) for k, v in extra.items()})
    path = tmp_path / "train.cfg"
    path.write_text(
        "# training settings\n" + "\n".join(f"{k} = {v}" for k, v in lines.items()) + "\n"
    )
    return str(path)


def test_synth_writes_all_corpus_files(workdir):
    out = workdir / "corpus"
    for name in ("dict.txt", "train.tsv", "test.tsv", "docs.txt"):
        assert (out / name).exists(), name
    train = corpus.parse_labeled_queries((out / "train.tsv").read_text())
    assert len(train) == 60
    docs = corpus.parse_documents((out / "docs.txt").read_text())
    assert len(docs) == 40


def test_full_pipeline(workdir, capsys):
    out = workdir / "corpus"
    queries = workdir / "queries.txt"
    test_items = corpus.parse_labeled_queries((out / "test.tsv").read_text())
    queries.write_text(corpus.format_queries([q.text for q in test_items]))

    assert main([
        "autolabel", "--dict", str(out / "dict.txt"),
        "--queries", str(queries), "--out", str(workdir / "auto.tsv"),
    ]) == EXIT_OK
    assert "coverage" in capsys.readouterr().out

    assert main([
        "index", "--docs", str(out / "docs.txt"), "--out", str(workdir / "docs.idx"),
    ]) == EXIT_OK

    assert main([
        "train", "--train", str(out / "train.tsv"), "--docs", str(out / "docs.txt"),
        "--config", _train_config(workdir),
        "--out", str(workdir / "model.bin"), "--history", str(workdir / "hist.csv"),
    ]) == EXIT_OK
    history = (workdir / "hist.csv").read_text().strip().splitlines()
    assert history[0] == "epoch,loss,val_f1" and len(history) == 3

    assert main([
        "segment", "--model", str(workdir / "model.bin"), "--variant", "q",
        "--queries", str(queries), "--out", str(workdir / "pred.tsv"),
    ]) == EXIT_OK
    pred = corpus.parse_labeled_queries((workdir / "pred.tsv").read_text())
    assert [p.text for p in pred] == [q.text for q in test_items]

    assert main([
        "eval", "--pred", str(workdir / "pred.tsv"), "--gold", str(out / "test.tsv"),
        "--train", str(out / "train.tsv"), "--out", str(workdir / "metrics.txt"),
    ]) == EXIT_OK
    screen = capsys.readouterr().out
    assert "f1" in screen
    kv = dict(
        line.split("=", 1)
        for line in (workdir / "metrics.txt").read_text().strip().splitlines()
    )
    assert 0.0 <= float(kv["f1"]) <= 1.0
    assert "recall_iv" in kv


def test_segment_variant_must_match_model(workdir):
    out = workdir / "corpus"
    assert main([
        "train", "--train", str(out / "train.tsv"), "--docs", str(out / "docs.txt"),
        "--config", _train_config(workdir), "--out", str(workdir / "model.bin"),
    ]) == EXIT_OK
    code = main([
        "segment", "--model", str(workdir / "model.bin"), "--variant", "qc",
        "--queries", str(out / "docs.txt"), "--out", str(workdir / "x.tsv"),
    ])
    assert code == EXIT_USAGE


def test_segment_context_variant_requires_docs(workdir):
    out = workdir / "corpus"
    assert main([
        "train", "--train", str(out / "train.tsv"), "--docs", str(out / "docs.txt"),
        "--config", _train_config(workdir, variant="qc", max_epochs="1"),
        "--out", str(workdir / "model_qc.bin"),
    ]) == EXIT_OK
    queries = workdir / "q.txt"
    queries.write_text("ab\n")
    code = main([
        "segment", "--model", str(workdir / "model_qc.bin"), "--variant", "qc",
        "--queries", str(queries), "--out", str(workdir / "x.tsv"),
    ])
    assert code == EXIT_USAGE


def test_explicit_flags_beat_config_file(workdir):
    out = workdir / "corpus"
    config = _train_config(workdir, max_epochs="1")
    assert main([
        "train", "--train", str(out / "train.tsv"), "--docs", str(out / "docs.txt"),
        "--config", config, "--max-epochs", "2", "--patience", "5",
        "--out", str(workdir / "model.bin"), "--history", str(workdir / "hist.csv"),
    ]) == EXIT_OK
    history = (workdir / "hist.csv").read_text().strip().splitlines()
    assert len(history) == 1 + 2


def test_bad_config_lines_are_usage_errors(workdir):
    out = workdir / "corpus"
    for text in ("nonsense\n", "no_such_key = 1\n", "lr = banana\n"):
        bad = workdir / "bad.cfg"
        bad.write_text(text)
        code = main([
            "train", "--train", str(out / "train.tsv"), "--docs", str(out / "docs.txt"),
            "--config", str(bad), "--out", str(workdir / "m.bin"),
        ])
        assert code == EXIT_USAGE, text


def test_unknown_train_variant_rejected(workdir):
    out = workdir / "corpus"
    code = main([
        "train", "--train", str(out / "train.tsv"), "--docs", str(out / "docs.txt"),
        "--variant", "zz", "--out", str(workdir / "m.bin"),
    ])
    assert code == EXIT_USAGE


def test_features_dump_and_binary_output(workdir, capsys):
    out = workdir / "corpus"
    queries = workdir / "q.txt"
    docs = corpus.parse_documents((out / "docs.txt").read_text())
    queries.write_text(docs[0][:2] + "\n")
    bags_path = workdir / "bags.bin"
    assert main([
        "features", "--docs", str(out / "docs.txt"), "--queries", str(queries),
        "--window", "1", "--k-max", "3", "--out", str(bags_path), "--dump",
    ]) == EXIT_OK
    assert capsys.readouterr().out  # dump requested
    with open(bags_path, "rb") as fh:
        per_query, t = load_feature_bags(fh)
    assert t == 1
    assert len(per_query) == 1
    assert len(per_query[0]) == 2  # one bag per query character


def test_features_can_reuse_saved_index(workdir, capsys):
    out = workdir / "corpus"
    assert main([
        "index", "--docs", str(out / "docs.txt"), "--out", str(workdir / "docs.idx"),
    ]) == EXIT_OK
    queries = workdir / "q.txt"
    docs = corpus.parse_documents((out / "docs.txt").read_text())
    queries.write_text(docs[0][:2] + "\n")
    assert main([
        "features", "--docs", str(out / "docs.txt"), "--index", str(workdir / "docs.idx"),
        "--queries", str(queries), "--dump",
    ]) == EXIT_OK
    assert capsys.readouterr().out


def test_uns_baseline_runs_and_validates_sources(workdir):
    out = workdir / "corpus"
    queries = workdir / "q.txt"
    test_items = corpus.parse_labeled_queries((out / "test.tsv").read_text())
    queries.write_text(corpus.format_queries([q.text for q in test_items]))
    pred_path = workdir / "uns.tsv"
    assert main([
        "uns", "--queries", str(queries), "--stats-queries", str(queries),
        "--docs", str(out / "docs.txt"), "--out", str(pred_path),
    ]) == EXIT_OK
    pred = corpus.parse_labeled_queries(pred_path.read_text())
    assert [p.text for p in pred] == [q.text for q in test_items]

    code = main([
        "uns", "--queries", str(queries), "--no-queries", "--no-documents",
        "--out", str(workdir / "x.tsv"),
    ])
    assert code == EXIT_DATA


def test_data_errors_exit_2(workdir):
    out = workdir / "corpus"
    bad = workdir / "bad.tsv"
    bad.write_text("ab\tab\nxy\t\n")  # empty segment field
    assert main([
        "eval", "--pred", str(bad), "--gold", str(bad),
    ]) == EXIT_DATA

    short = workdir / "short.tsv"
    short.write_text("ab\tab\n")
    assert main([
        "eval", "--pred", str(short), "--gold", str(out / "test.tsv"),
    ]) == EXIT_DATA

    assert main([
        "index", "--docs", str(workdir / "missing.txt"), "--out", str(workdir / "x.idx"),
    ]) == EXIT_DATA


def test_usage_errors_exit_1():
    assert main([]) == EXIT_USAGE
    assert main(["synth"]) == EXIT_USAGE  # missing --out-dir
    assert main(["segment", "--model", "x", "--queries", "y",
                 "--variant", "zz", "--out", "z"]) == EXIT_USAGE


def test_infeasible_synth_exits_2(tmp_path):
    assert main([
        "synth", "--alphabet-size", "2", "--vocab-size", "4",
        "--word-len", "1,1", "--out-dir", str(tmp_path / "x"),
    ]) == EXIT_DATA
