import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from gedkit.cli import main

from oracles import brute_force_align, oracle_labels

FIXTURES = Path(__file__).parent / "fixtures"


def run(*args):
    return main([str(a) for a in args])


def manifest(path):
    return json.loads(Path(str(path) + ".manifest.json").read_text())


def strip_created(path):
    obj = manifest(path)
    obj.pop("created")
    return obj


@pytest.fixture
def corpus(tmp_path):
    text = tmp_path / "clean.txt"
    text.write_text("".join(f"the cat sat on mat number {k} today\n" for k in range(300)) + "\nshort\n")
    words = tmp_path / "dict.txt"
    words.write_text("the\t50\ncat\t10\nbat\t5\nhat\t4\nsat\t9\nset\t3\non\t30\nin\t28\nmat\t2\ntoday\t1\nnumber\t2\n")
    return text, words


class TestExitCodes:
    def test_no_subcommand(self):
        assert run() == 1

    def test_unknown_flag(self):
        assert run("evaluate", "--nope") == 1

    def test_missing_required(self):
        assert run("corrupt", "--in", "x") == 1

    def test_missing_input_file(self, tmp_path):
        assert run("convert", "--m2", tmp_path / "missing.m2", "--out", tmp_path / "o.tsv") == 2

    def test_format_error(self, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("a\tq\n")
        assert run("evaluate", "--gold", bad, "--pred", bad) == 1

    def test_shape_mismatch(self, tmp_path):
        pred = tmp_path / "p.tsv"
        pred.write_text("The\t0.1\n\n")
        assert run("evaluate", "--gold", FIXTURES / "gold.tsv", "--pred", pred) == 1

    def test_version(self, capsys):
        assert run("--version") == 0
        out = capsys.readouterr().out
        assert out.startswith("gedkit 0.1.0") and "multiged-tsv 1" in out

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "gedkit", "evaluate"], capture_output=True, text=True)
        assert proc.returncode == 1 and "required" in proc.stderr


class TestConvert:
    def test_fixture(self, tmp_path):
        out = tmp_path / "o.tsv"
        assert run("convert", "--m2", FIXTURES / "sample.m2", "--out", out) == 0
        blocks = out.read_text().split("\n\n")
        assert blocks[0] == "The\tc\ncat\ti\nsat\tc"
        assert manifest(out)["counters"] == {"sentences": 4}

    def test_missing_annotator(self, tmp_path):
        assert run("convert", "--m2", FIXTURES / "sample.m2", "--out", tmp_path / "o", "--annotator", 5) == 1


class TestLabel:
    def expected(self):
        orig = (FIXTURES / "parallel.orig.txt").read_text().splitlines()
        corr = (FIXTURES / "parallel.corr.txt").read_text().splitlines()
        blocks = []
        for a, b in zip(orig, corr):
            a, b = a.split(), b.split()
            if not a or not b:
                continue
            _, ops = brute_force_align(a, b)
            labels = oracle_labels(ops, len(b))
            blocks.append("".join(f"{t}\t{l}\n" for t, l in zip(b, labels)) + "\n")
        return "".join(blocks)

    def test_matches_oracle(self, tmp_path):
        out = tmp_path / "o.tsv"
        rc = run("label", "--original", FIXTURES / "parallel.orig.txt", "--corrupted", FIXTURES / "parallel.corr.txt",
                 "--out", out, "--threads", 1)
        assert rc == 0
        assert out.read_text() == self.expected()
        counters = manifest(out)["counters"]
        assert counters["pairs_labeled"] == 6 and counters["pairs_skipped_degenerate"] == 1

    def test_known_lines(self, tmp_path):
        out = tmp_path / "o.tsv"
        run("label", "--original", FIXTURES / "parallel.orig.txt", "--corrupted", FIXTURES / "parallel.corr.txt", "--out", out)
        blocks = out.read_text().split("\n\n")
        assert blocks[0] == "I\tc\nhas\ti\na\tc\ndog\tc\n.\tc"
        assert blocks[1] == "she\tc\nis\tc\nnice\ti"

    def test_threads_identical(self, tmp_path):
        args = ["label", "--original", FIXTURES / "parallel.orig.txt", "--corrupted", FIXTURES / "parallel.corr.txt"]
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        run(*args, "--out", a, "--threads", 1, "--emit-edits", tmp_path / "a.jsonl")
        run(*args, "--out", b, "--threads", 3, "--emit-edits", tmp_path / "b.jsonl")
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        assert manifest(a)["config_hash"] == manifest(b)["config_hash"]

    def test_pairs_tsv_and_edits(self, tmp_path):
        pairs = tmp_path / "p.tsv"
        pairs.write_text("she is very nice\tshe is nice\n")
        out, edits = tmp_path / "o.tsv", tmp_path / "e.jsonl"
        assert run("label", "--pairs", pairs, "--out", out, "--emit-edits", edits) == 0
        rec = json.loads(edits.read_text())
        assert rec == {"sentence": 0, "kind": "delete", "original_span": [2, 3], "corrupted_span": [2, 2],
                       "original": ["very"], "corrupted": []}

    def test_both_sources_is_usage_error(self, tmp_path):
        assert run("label", "--pairs", FIXTURES / "sample.tsv", "--original", FIXTURES / "sample.tsv",
                   "--out", tmp_path / "o") == 1

    def test_line_count_mismatch(self, tmp_path):
        short = tmp_path / "s.txt"
        short.write_text("one line\n")
        assert run("label", "--original", FIXTURES / "parallel.orig.txt", "--corrupted", short, "--out", tmp_path / "o") == 1

    def test_unicode_tokenizer(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        a.write_text("Hello, world.\n")
        b.write_text("Hello world.\n")
        out = tmp_path / "o.tsv"
        assert run("label", "--original", a, "--corrupted", b, "--out", out, "--tokenizer", "unicode-words") == 0
        assert out.read_text() == "Hello\tc\nworld\ti\n.\tc\n\n"


class TestCorrupt:
    def test_output_and_determinism(self, tmp_path, corpus):
        text, words = corpus
        a, b, c = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "c.jsonl"
        base = ["corrupt", "--in", text, "--dict", words, "--seed", 7]
        assert run(*base, "--out", a, "--threads", 1) == 0
        assert run(*base, "--out", b, "--threads", 3) == 0
        assert run(*base, "--out", c, "--threads", 1) == 0
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()
        assert strip_created(a)["config_hash"] == strip_created(b)["config_hash"]
        recs = [json.loads(line) for line in a.read_text().splitlines()]
        assert len(recs) == 302
        assert set(recs[0]) == {"original", "corrupted", "language", "provenance", "seed"}
        assert recs[0]["provenance"] == "synthetic-rules"
        assert sum(r["original"] != r["corrupted"] for r in recs) > 100

    def test_config_file_and_override(self, tmp_path, corpus):
        text, words = corpus
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 3, "corrupt": {"p_word": 0.0, "p_char": 0.0}}))
        out = tmp_path / "o.jsonl"
        assert run("--config", cfg, "corrupt", "--in", text, "--dict", words, "--out", out) == 0
        recs = [json.loads(line) for line in out.read_text().splitlines()]
        assert all(r["original"] == r["corrupted"] for r in recs)
        assert manifest(out)["config"]["seed"] == 3
        assert run("--config", cfg, "corrupt", "--in", text, "--dict", words, "--out", out, "--p-word", "1") == 0
        recs = [json.loads(line) for line in out.read_text().splitlines()]
        assert all(r["original"] != r["corrupted"] for r in recs if r["original"] not in ("short", ""))

    def test_unknown_config_key(self, tmp_path, corpus):
        text, words = corpus
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"corrupt": {"p_wrod": 0.1}}))
        assert run("--config", cfg, "corrupt", "--in", text, "--dict", words, "--out", tmp_path / "o") == 1

    def test_bad_weights(self, tmp_path, corpus):
        text, words = corpus
        assert run("corrupt", "--in", text, "--dict", words, "--out", tmp_path / "o", "--weights", "explode=1") == 1
        assert run("corrupt", "--in", text, "--dict", words, "--out", tmp_path / "o", "--p-word", "2") == 1

    def test_empty_dictionary(self, tmp_path, corpus):
        text, _ = corpus
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        assert run("corrupt", "--in", text, "--dict", empty, "--out", tmp_path / "o") == 1


class TestConfusion:
    def test_build_and_query(self, tmp_path, corpus, capsys):
        _, words = corpus
        idx = tmp_path / "idx.pkl"
        assert run("confusion", "build", "--dict", words, "--max-distance", 1, "--out", idx) == 0
        capsys.readouterr()
        assert run("confusion", "query", "--index", idx, "--word", "cat", "--word", "zzz") == 0
        lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert [n["word"] for n in lines[0]["neighbors"]] == ["sat", "bat", "hat", "mat"]
        assert lines[1]["neighbors"] == []

    def test_query_from_dict(self, corpus, capsys):
        _, words = corpus
        assert run("confusion", "query", "--dict", words, "--word", "in") == 0
        out = json.loads(capsys.readouterr().out)
        assert out["neighbors"][0] == {"word": "on", "distance": 1, "count": 30}

    def test_bad_index(self, tmp_path):
        junk = tmp_path / "junk.pkl"
        junk.write_bytes(b"not a pickle")
        assert run("confusion", "query", "--index", junk, "--word", "a") == 1


class TestSample:
    def test_sample(self, tmp_path, corpus):
        text, _ = corpus
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert run("sample", "--in", text, "--n", 25, "--seed", 1, "--out", a, "--threads", 1) == 0
        assert run("sample", "--in", text, "--n", 25, "--seed", 1, "--out", b, "--threads", 4) == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 25
        c = manifest(a)["counters"]
        assert c["dropped_length"] == 2 and c["survivors"] == 300

    def test_n_from_config(self, tmp_path, corpus):
        text, _ = corpus
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sample": {"n": 7}}))
        out = tmp_path / "o.txt"
        assert run("--config", cfg, "sample", "--in", text, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 7
        assert run("sample", "--in", text, "--out", out) == 1

    def test_shortfall_is_not_an_error(self, tmp_path, corpus):
        text, _ = corpus
        out = tmp_path / "o.txt"
        assert run("sample", "--in", text, "--n", 1000, "--out", out) == 0
        assert manifest(out)["counters"]["shortfall"] == 700


class TestEvaluate:
    def test_report(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        assert run("evaluate", "--gold", FIXTURES / "gold.tsv", "--pred", FIXTURES / "pred.tsv", "--out", out) == 0
        rep = json.loads(capsys.readouterr().out)
        assert (rep["true_positives"], rep["false_positives"], rep["false_negatives"], rep["true_negatives"]) == (1, 2, 1, 3)
        # P = 1/3, R = 1/2, F0.5 = 1.25 * (1/6) / (1/12 + 1/2) = 5/14
        assert rep["f_half"] == pytest.approx(5 / 14, abs=1e-12)
        assert json.loads(out.read_text()) == rep

    def test_threshold(self, capsys):
        assert run("evaluate", "--gold", FIXTURES / "gold.tsv", "--pred", FIXTURES / "pred.tsv", "--threshold", 0.9) == 0
        rep = json.loads(capsys.readouterr().out)
        assert (rep["true_positives"], rep["false_positives"]) == (0, 1)

    def test_pr_curve(self, tmp_path):
        out, svg = tmp_path / "c.csv", tmp_path / "c.svg"
        assert run("pr-curve", "--gold", FIXTURES / "gold.tsv", "--pred", FIXTURES / "pred.tsv", "--out", out, "--svg", svg) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "threshold,precision,recall"
        assert [float(r.split(",")[0]) for r in rows[1:]] == [0.0, 0.1, 0.3, 0.6, 0.8, 1.0]
        assert svg.read_bytes().startswith(b"<?xml")
        assert set(manifest(out)["outputs"]) == {str(out), str(svg)}


class TestAnalyze:
    def test_edits_then_entropy(self, tmp_path, capsys):
        out, edits = tmp_path / "o.tsv", tmp_path / "e.jsonl"
        run("label", "--original", FIXTURES / "parallel.orig.txt", "--corrupted", FIXTURES / "parallel.corr.txt",
            "--out", out, "--emit-edits", edits)
        dist = tmp_path / "d.json"
        assert run("analyze", "edits", "--in", edits, "--out", dist) == 0
        obj = json.loads(dist.read_text())
        assert "approximation" in obj["note"]
        assert obj["total"] == len(edits.read_text().splitlines())
        capsys.readouterr()
        assert run("analyze", "entropy", "--in", dist, "--k", 8, "--k", 16) == 0
        res = json.loads(capsys.readouterr().out)
        assert len(res["per_k"]) == 2
        ks = [r["normalized_entropy"] for r in res["per_k"]]
        assert res["mean_normalized_entropy"] == pytest.approx(sum(ks) / 2)

    def test_clusters(self, tmp_path, capsys):
        clusters = tmp_path / "c.tsv"
        clusters.write_text("a\t1\nb\t1\nc\t2\nd\t3\n")
        dist = tmp_path / "d.json"
        assert run("analyze", "clusters", "--in", clusters, "--out", dist) == 0
        capsys.readouterr()
        assert run("analyze", "entropy", "--in", dist, "--k", 4) == 0
        assert json.loads(capsys.readouterr().out)["mean_normalized_entropy"] == pytest.approx(0.75)

    def test_entropy_mismatched_inputs(self, tmp_path):
        d = tmp_path / "d.json"
        d.write_text(json.dumps({"counts": {"a": 1}}))
        assert run("analyze", "entropy", "--in", d, "--in", d, "--k", 2, "--k", 4, "--k", 8) == 1
        d.write_text(json.dumps({"counts": {"a": 0}}))
        assert run("analyze", "entropy", "--in", d, "--k", 2) == 1


class TestDiscriminator:
    def test_balanced_and_deterministic(self, tmp_path, corpus):
        text, words = corpus
        synth = tmp_path / "s.jsonl"
        run("corrupt", "--in", text, "--dict", words, "--out", synth, "--p-word", 0.5)
        auth = tmp_path / "a.tsv"
        auth.write_text("".join(f"we have {k} cats\twe has {k} cats\n" for k in range(40)))
        a, b = tmp_path / "a.out", tmp_path / "b.out"
        assert run("discriminator-data", "--authentic", auth, "--synthetic", synth, "--seed", 5, "--out", a, "--threads", 1) == 0
        assert run("discriminator-data", "--authentic", auth, "--synthetic", synth, "--seed", 5, "--out", b, "--threads", 2) == 0
        assert a.read_bytes() == b.read_bytes()
        origins = [line.split("\t")[2] for line in a.read_text().splitlines()]
        assert origins.count("authentic") == origins.count("synthetic") == 40


def test_rerun_is_idempotent(tmp_path, corpus):
    """Byte-identical outputs and manifests (minus the timestamp) on rerun."""
    text, words = corpus
    out = tmp_path / "o.jsonl"
    run("corrupt", "--in", text, "--dict", words, "--out", out, "--seed", 9)
    first, first_manifest = out.read_bytes(), strip_created(out)
    run("corrupt", "--in", text, "--dict", words, "--out", out, "--seed", 9)
    assert out.read_bytes() == first
    assert strip_created(out) == first_manifest


def test_manifest_records_digests(tmp_path):
    src = tmp_path / "s.m2"
    shutil.copy(FIXTURES / "sample.m2", src)
    out = tmp_path / "o.tsv"
    run("convert", "--m2", src, "--out", out)
    m = manifest(out)
    assert m["inputs"][str(src)].startswith("sha256:")
    assert m["outputs"][str(out)].startswith("sha256:")
    assert m["subcommand"] == "convert"
