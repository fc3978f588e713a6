from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from relsent import bundle
from relsent.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from relsent.corpus import load_corpus, save_corpus
from relsent.tagger import train_term_extractor


@pytest.fixture()
def corpus_path(tmp_path, synthetic):
    p = tmp_path / "gold.jsonl"
    save_corpus(synthetic[:8], p)
    return p


def _train(stage, corpus, out, *extra):
    return main(["train", stage, "--corpus", str(corpus), "--out", str(out), *extra])


def test_train_epochs_zero_writes_initial_weights(corpus_path, tmp_path, capsys):
    out = tmp_path / "t.bin"
    assert _train("terms", corpus_path, out, "--epochs", "0", "--seed", "3") == EXIT_OK
    model = bundle.load_bundle(out)
    fresh = train_term_extractor(load_corpus(corpus_path), "stacked", epochs=0, seed=3)
    for a, b in zip(model.parameters(), fresh.parameters()):
        assert np.array_equal(a.value, b.value)
    assert "randomly initialised" in capsys.readouterr().err


def test_train_prints_epoch_losses_and_is_reproducible(corpus_path, tmp_path, capsys):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    assert _train("sentiment", corpus_path, a, "--epochs", "2") == EXIT_OK
    out = capsys.readouterr().out
    assert "epoch   1" in out and "epoch   2" in out
    assert _train("sentiment", corpus_path, b, "--epochs", "2") == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_train_with_embeddings_file(corpus_path, tmp_path, capsys):
    vec = tmp_path / "vec.txt"
    rng = np.random.default_rng(0)
    vec.write_text("2 100\n" + "\n".join(w + " " + " ".join(map(str, rng.normal(size=100)))
                                          for w in ("battery", "great")) + "\n")
    out = tmp_path / "r.bin"
    assert _train("relations", corpus_path, out, "--epochs", "1", "--embeddings", str(vec)) == EXIT_OK
    assert "randomly" not in capsys.readouterr().err
    assert bundle.inspect_bundle(out)["vocabulary"] == 4


def test_pipeline_output_is_a_corpus(corpus_path, tmp_path):
    paths = {s: tmp_path / f"{s}.bin" for s in ("terms", "sentiment", "relations")}
    for stage, p in paths.items():
        assert _train(stage, corpus_path, p, "--epochs", "1", "--kind", "joint") == EXIT_OK
    pred = tmp_path / "pred.jsonl"
    argv = ["pipeline", "--corpus", str(corpus_path), "--out", str(pred)]
    for p in (paths["relations"], paths["terms"], paths["sentiment"]):
        argv += ["--model", str(p)]
    assert main(argv) == EXIT_OK
    out = load_corpus(pred)
    assert [r.id for r in out] == [r.id for r in load_corpus(corpus_path)]
    assert all(o.sentiment is not None for r in out for o in r.opinions)


def test_pipeline_needs_three_distinct_bundles(corpus_path, tmp_path, capsys):
    p = tmp_path / "s.bin"
    _train("sentiment", corpus_path, p, "--epochs", "0")
    argv = ["pipeline", "--corpus", str(corpus_path), "--out", str(tmp_path / "x")]
    assert main(argv + ["--model", str(p)]) == EXIT_USAGE
    assert main(argv + ["--model", str(p)] * 3) == EXIT_USAGE


def test_evaluate_gold_against_gold(corpus_path, capsys):
    for mode in ("terms", "sentiment", "relations"):
        capsys.readouterr()
        assert main(["evaluate", mode, "--corpus", str(corpus_path), "--pred", str(corpus_path),
                     "--json"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        if mode == "terms":
            assert report["aspects"]["f1"] == report["opinions"]["f1"] == 1.0
        elif mode == "sentiment":
            assert report["model"]["accuracy"] == 1.0
            assert {"accuracy", "correct", "incorrect"} <= set(report["positive_only"])
        else:
            assert set(report["relations"]) >= {"precision", "recall", "f1"}
            assert report["relations"]["f1"] == 1.0


def test_evaluate_with_model(corpus_path, tmp_path, capsys):
    p = tmp_path / "r.bin"
    _train("relations", corpus_path, p, "--epochs", "1")
    capsys.readouterr()
    assert main(["evaluate", "relations", "--corpus", str(corpus_path), "--model", str(p)]) == EXIT_OK
    assert "Relations" in capsys.readouterr().out


def test_evaluate_cv(corpus_path, capsys):
    assert main(["evaluate", "cv", "--corpus", str(corpus_path), "--k", "2", "--epochs", "1",
                 "--stages", "sentiment", "--json"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["k"] == 2 and "model" in report


def test_evaluate_misaligned_is_data_fault(corpus_path, tmp_path, synthetic):
    other = tmp_path / "other.jsonl"
    save_corpus(synthetic[8:12], other)
    assert main(["evaluate", "terms", "--corpus", str(corpus_path), "--pred", str(other)]) == EXIT_DATA


def test_predict_then_inspect(corpus_path, tmp_path, capsys):
    p = tmp_path / "t.bin"
    _train("terms", corpus_path, p, "--epochs", "1", "--kind", "cnn")
    out = tmp_path / "pred.jsonl"
    assert main(["predict", "--model", str(p), "--corpus", str(corpus_path), "--out", str(out)]) == EXIT_OK
    assert len(load_corpus(out)) == 8
    capsys.readouterr()
    assert main(["inspect", "--model", str(p), "--json"]) == EXIT_OK
    info = json.loads(capsys.readouterr().out)
    assert info["kind"] == "terms"
    assert info["layer_sizes"] == {"aspect": [100, 50, 50, 50, 3], "opinion": [100, 50, 50, 50, 3]}


def test_gradcheck_passes_and_lists_every_parameter_once(capsys):
    assert main(["gradcheck", "--kind", "stacked", "--json"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    names = list(report["results"]["stacked"])
    assert len(names) == len(set(names))
    assert "gru.U_h" in names and "word_embedding" in names
    assert all(e <= 1e-4 for e in report["results"]["stacked"].values())


def test_gradcheck_catches_planted_bug(capsys):
    assert main(["gradcheck", "--kind", "relation", "--plant-bug"]) == EXIT_NUMERIC
    assert "FAIL" in capsys.readouterr().out


def test_usage_and_data_exit_codes(corpus_path, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "bogus", "--corpus", str(corpus_path), "--out", "x"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE
    assert main(["predict", "--model", str(tmp_path / "none.bin"), "--corpus", str(corpus_path),
                 "--out", "x"]) == EXIT_DATA
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "tokens": ["x"], "pos": []}\n')
    assert _train("terms", bad, tmp_path / "t.bin") == EXIT_DATA
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"not a bundle at all")
    assert main(["inspect", "--model", str(junk)]) == EXIT_DATA


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_fault_exit_code(corpus_path, tmp_path):
    assert _train("sentiment", corpus_path, tmp_path / "s.bin", "--epochs", "1", "--lr", "1e308") \
        == EXIT_NUMERIC


def test_installed_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "relsent.cli", "gradcheck", "--kind", "cnn"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "conv1.kernel" in proc.stdout
