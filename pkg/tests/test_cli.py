import json

import pytest

from uprkit import load_run
from uprkit.cli import main
from uprkit.corpus import export_corpus
from uprkit.queries import save_queries
from uprkit.synthetic import build_synthetic_collection


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Small end-to-end fixture: corpus, queries, qrels on disk."""
    root = tmp_path_factory.mktemp("cli")
    coll = build_synthetic_collection(num_passages=80, num_queries=8, seed=5)
    export_corpus(coll.corpus, root / "psgs.tsv", "tsv")
    save_queries(coll.queries, root / "q.jsonl")
    qrels_lines = [f"{qid} 0 {gold} 1" for qid, gold in coll.gold_ids.items()]
    (root / "qrels.txt").write_text("\n".join(qrels_lines) + "\n")
    return root


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestIndexRetrieve:
    def test_index_then_retrieve(self, workdir):
        index_path = workdir / "index.json"
        assert run_cli("index", "--corpus", workdir / "psgs.tsv", "--out", index_path) == 0
        document = json.loads(index_path.read_text())
        assert document["index"]["doc_count"] == 80

        run_path = workdir / "bm25.trec"
        code = run_cli(
            "retrieve", "--index", index_path, "--queries", workdir / "q.jsonl",
            "--depth", 50, "--out", run_path,
        )
        assert code == 0
        run = load_run(run_path, "trec")
        assert set(run.entries) == {f"q{i:03d}" for i in range(8)}
        assert run.tag == "bm25"

    def test_retrieve_from_corpus_matches_index_route(self, workdir):
        a, b = workdir / "via_corpus.trec", workdir / "via_index.trec"
        run_cli("retrieve", "--corpus", workdir / "psgs.tsv", "--queries", workdir / "q.jsonl",
                "--depth", 20, "--out", a)
        run_cli("index", "--corpus", workdir / "psgs.tsv", "--out", workdir / "i2.json")
        run_cli("retrieve", "--index", workdir / "i2.json", "--queries", workdir / "q.jsonl",
                "--depth", 20, "--out", b)
        assert load_run(a, "trec").entries == load_run(b, "trec").entries

    def test_header_echoes_config(self, workdir):
        out = workdir / "hdr.trec"
        run_cli("retrieve", "--corpus", workdir / "psgs.tsv", "--queries", workdir / "q.jsonl",
                "--depth", 7, "--out", out)
        head = out.read_text().splitlines()[:9]
        assert head[0].startswith("# uprkit retrieve")
        assert any("depth=7" in line for line in head)


class TestRerank:
    def test_happy_path_and_determinism(self, workdir):
        run_path = workdir / "base.trec"
        run_cli("retrieve", "--corpus", workdir / "psgs.tsv", "--queries", workdir / "q.jsonl",
                "--depth", 50, "--out", run_path)
        out1, out2 = workdir / "upr1.trec", workdir / "upr2.trec"
        for out in (out1, out2):
            code = run_cli(
                "rerank", "--run", run_path, "--corpus", workdir / "psgs.tsv",
                "--queries", workdir / "q.jsonl", "--scorer", "mock",
                "--depth", 50, "--out", out,
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert load_run(out1, "trec").tag == "bm25+upr"

    def test_progress_resume_produces_same_output(self, workdir):
        run_path = workdir / "base.trec"
        full, resumed = workdir / "full.trec", workdir / "resumed.trec"
        progress = workdir / "progress.jsonl"
        run_cli("rerank", "--run", run_path, "--corpus", workdir / "psgs.tsv",
                "--queries", workdir / "q.jsonl", "--out", full)
        # Seed the progress file with a first pass, then rerun against it.
        run_cli("rerank", "--run", run_path, "--corpus", workdir / "psgs.tsv",
                "--queries", workdir / "q.jsonl", "--progress", progress, "--out", workdir / "x.trec")
        run_cli("rerank", "--run", run_path, "--corpus", workdir / "psgs.tsv",
                "--queries", workdir / "q.jsonl", "--progress", progress, "--out", resumed)
        assert load_run(full, "trec").entries == load_run(resumed, "trec").entries

    def test_unknown_flag_exits_1(self, workdir, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("rerank", "--nonsense")
        assert exc.value.code == 1

    def test_unreachable_scorer_exits_3(self, workdir):
        run_path = workdir / "base.trec"
        code = run_cli(
            "rerank", "--run", run_path, "--corpus", workdir / "psgs.tsv",
            "--queries", workdir / "q.jsonl", "--scorer", "http://127.0.0.1:9",
            "--out", workdir / "never.trec",
        )
        assert code == 3

    def test_missing_corpus_file_exits_2(self, workdir):
        code = run_cli(
            "rerank", "--run", workdir / "base.trec", "--corpus", workdir / "missing.tsv",
            "--queries", workdir / "q.jsonl", "--out", workdir / "never.trec",
        )
        assert code == 2

    def test_candidate_not_in_corpus_exits_2_before_scoring(self, workdir):
        bad_run = workdir / "bad.trec"
        bad_run.write_text("q000 Q0 ghost 1 1.0 bm25\n")
        code = run_cli(
            "rerank", "--run", bad_run, "--corpus", workdir / "psgs.tsv",
            "--queries", workdir / "q.jsonl", "--out", workdir / "never.trec",
        )
        assert code == 2


class TestFuseEvalProfile:
    def test_fuse(self, workdir):
        a, b = workdir / "fa.trec", workdir / "fb.trec"
        run_cli("retrieve", "--corpus", workdir / "psgs.tsv", "--queries", workdir / "q.jsonl",
                "--depth", 5, "--tag", "sysA", "--out", a)
        run_cli("retrieve", "--corpus", workdir / "psgs.tsv", "--queries", workdir / "q.jsonl",
                "--depth", 10, "--tag", "sysB", "--out", b)
        out = workdir / "fused.trec"
        assert run_cli("fuse", "--runs", a, b, "--depth", 10, "--out", out) == 0
        assert load_run(out, "trec").tag == "union(sysA,sysB)"

    def test_eval_accuracy_and_rank_metrics(self, workdir):
        run_path = workdir / "upr1.trec"
        out = workdir / "report.tsv"
        code = run_cli(
            "eval", "--run", run_path, "--queries", workdir / "q.jsonl",
            "--corpus", workdir / "psgs.tsv", "--ks", "1,5,20",
            "--qrels", workdir / "qrels.txt", "--out", out,
        )
        assert code == 0
        text = out.read_text()
        assert text.startswith("# uprkit eval")
        assert "top1_accuracy\t1.000000" in text
        assert "ndcg@10\t1.000000" in text
        assert "recall@100\t1.000000" in text

    def test_eval_without_inputs_exits_1(self, workdir):
        code = run_cli("eval", "--run", workdir / "upr1.trec", "--out", workdir / "r.tsv")
        assert code == 1

    def test_profile(self, workdir):
        run_path = workdir / "base.trec"
        out = workdir / "profile.tsv"
        code = run_cli(
            "profile", "--run", run_path, "--corpus", workdir / "psgs.tsv",
            "--queries", workdir / "q.jsonl", "--depths", "5,20",
            "--accuracy-k", "5", "--batch-size", "5", "--mock-delay", "0.002",
            "--out", out,
        )
        assert code == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "depth\ttop5_accuracy\tseconds_per_query"
        assert len(lines) == 3
