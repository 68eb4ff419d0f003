"""Command-line entry point: index, retrieve, fuse, rerank, eval, profile.

The CLI is a thin client of the pipeline service: it reads and writes the
file formats, builds request payloads, and posts them to the FastAPI app.
By default the app runs in-process; point ``--server`` (or the
``UPRKIT_SERVER`` environment variable) at a running instance to use a
shared one. All outputs are written atomically (temp file + rename) and
carry a ``#`` comment header echoing the effective configuration.

Exit codes: 0 success, 1 usage error, 2 data error, 3 scorer-transport
error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
import tempfile
from pathlib import Path

import httpx

from . import __version__
from .corpus import Corpus, ingest_passages
from .errors import NotFoundError, ScorerTransportError, UprkitError
from .evaluation import load_qrels
from .queries import load_queries
from .reranker import RERANK_TAG_SUFFIX, _append_progress, _load_progress
from .retriever import RetrievalRun, RunCandidate, format_run, load_run
from .service.app import create_app

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3

SCORER_ENV = "UPRKIT_SCORER"
SERVER_ENV = "UPRKIT_SERVER"

DIRECTION_FLAGS = {
    "q-given-p": "question_given_passage",
    "p-given-q": "passage_given_question",
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _corpus_format(path: str, override: str | None) -> str:
    if override:
        return override
    return "jsonl" if path.endswith(".jsonl") else "tsv"


def _run_format(path: str, override: str | None) -> str:
    if override:
        return override
    return "jsonl" if path.endswith(".jsonl") else "trec"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    handle = tempfile.NamedTemporaryFile(
        "w", dir=path.parent or Path("."), suffix=".tmp", delete=False, encoding="utf-8"
    )
    try:
        handle.write(text)
        handle.close()
        os.replace(handle.name, path)
    except BaseException:
        handle.close()
        os.unlink(handle.name)
        raise


def _config_header(args: argparse.Namespace, keys: list[str]) -> list[str]:
    lines = [f"uprkit {args.command} v{__version__}"]
    for key in keys:
        value = getattr(args, key.replace("-", "_"))
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key}={value}")
    return lines


class _InProcessTransport(httpx.BaseTransport):
    """Drive the ASGI app from a synchronous httpx client."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def call() -> tuple[int, httpx.Headers, bytes]:
            response = await self._asgi.handle_async_request(request)
            body = await response.aread()
            return response.status_code, response.headers, body

        status, headers, body = asyncio.run(call())
        return httpx.Response(status_code=status, headers=headers, content=body, request=request)


class ServiceClient:
    """HTTP client for the pipeline service, in-process unless --server."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        else:
            self._client = httpx.Client(
                base_url="http://uprkit.service",
                transport=_InProcessTransport(create_app()),
                timeout=None,
            )

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise CliError(EXIT_TRANSPORT, f"pipeline service unreachable: {exc}") from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            code = EXIT_TRANSPORT if response.status_code >= 500 else EXIT_DATA
            raise CliError(code, f"{path}: {detail}")
        return response.json()

    def close(self) -> None:
        self._client.close()


def _passages_payload(corpus: Corpus) -> list[dict]:
    return [{"id": p.id, "text": p.text, "title": p.title} for p in corpus]


def _queries_payload(queries) -> list[dict]:
    return [{"id": q.id, "question": q.text, "answers": list(q.answers)} for q in queries]


def _run_payload(run: RetrievalRun) -> dict:
    return {
        "entries": {
            qid: [{"docid": c.docid, "score": c.score, "rank": c.rank} for c in candidates]
            for qid, candidates in run.entries.items()
        },
        "tag": run.tag,
    }


def _run_from_payload(payload: dict) -> RetrievalRun:
    return RetrievalRun(
        entries={
            qid: [RunCandidate(c["docid"], c["score"], c["rank"]) for c in candidates]
            for qid, candidates in payload["entries"].items()
        },
        tag=payload["tag"],
    )


def _scorer_spec(args: argparse.Namespace) -> dict:
    scorer = args.scorer
    if scorer == "mock":
        return {"kind": "mock", "delay_per_batch": getattr(args, "mock_delay", 0.0)}
    if scorer.startswith("http://") or scorer.startswith("https://"):
        return {"kind": "remote", "endpoint": scorer}
    raise CliError(EXIT_USAGE, f"--scorer must be 'mock' or an http(s) endpoint, got {scorer!r}")


def _rerank_options(args: argparse.Namespace) -> dict:
    options = {
        "direction": DIRECTION_FLAGS[args.direction],
        "batch_size": args.batch_size,
        "max_parallel_batches": args.parallel,
    }
    if args.template is not None or args.instruction is not None:
        options["template"] = {
            "pattern": args.template if args.template is not None else "Passage: {title}. {passage}.",
            "instruction": (
                args.instruction
                if args.instruction is not None
                else "Please write a question based on this passage. Question:"
            ),
        }
    return options


def cmd_index(args: argparse.Namespace, client: ServiceClient) -> int:
    corpus = ingest_passages(args.corpus, _corpus_format(args.corpus, args.corpus_format))
    payload = {
        "passages": _passages_payload(corpus),
        "k1": args.k1,
        "b": args.b,
        "idf_variant": args.idf_variant,
    }
    index = client.post("/v1/index", payload)
    header = _config_header(args, ["corpus", "k1", "b", "idf-variant"])
    atomic_write_text(
        args.out, json.dumps({"config": header, "index": index}, ensure_ascii=False) + "\n"
    )
    return EXIT_OK


def cmd_retrieve(args: argparse.Namespace, client: ServiceClient) -> int:
    queries = load_queries(args.queries)
    payload: dict = {
        "queries": _queries_payload(queries),
        "depth": args.depth,
        "tag": args.tag,
        "k1": args.k1,
        "b": args.b,
        "idf_variant": args.idf_variant,
    }
    if args.index:
        document = json.loads(Path(args.index).read_text(encoding="utf-8"))
        payload["index"] = document["index"]
    else:
        corpus = ingest_passages(args.corpus, _corpus_format(args.corpus, args.corpus_format))
        payload["passages"] = _passages_payload(corpus)
    run = _run_from_payload(client.post("/v1/retrieve", payload)["run"])
    header = _config_header(
        args, ["corpus", "index", "queries", "depth", "tag", "k1", "b", "idf-variant"]
    )
    atomic_write_text(args.out, format_run(run, _run_format(args.out, args.format), header))
    return EXIT_OK


def cmd_fuse(args: argparse.Namespace, client: ServiceClient) -> int:
    runs = [load_run(path, _run_format(path, None)) for path in args.runs]
    payload = {"runs": [_run_payload(run) for run in runs], "depth": args.depth}
    fused = _run_from_payload(client.post("/v1/fuse", payload)["run"])
    header = _config_header(args, ["runs", "depth"])
    atomic_write_text(args.out, format_run(fused, _run_format(args.out, args.format), header))
    return EXIT_OK


def cmd_rerank(args: argparse.Namespace, client: ServiceClient) -> int:
    corpus = ingest_passages(args.corpus, _corpus_format(args.corpus, args.corpus_format))
    queries = {q.id: q for q in load_queries(args.queries)}
    run = load_run(args.run, _run_format(args.run, None))

    # Fail fast before any scoring: every query and in-depth candidate must
    # resolve, otherwise accuracy numbers downstream would silently rot.
    for qid, candidates in run.entries.items():
        if qid not in queries:
            raise NotFoundError(f"run query {qid!r} has no query record in {args.queries}")
        for cand in candidates[: args.depth]:
            if cand.docid not in corpus:
                raise NotFoundError(
                    f"query {qid!r}: candidate passage {cand.docid!r} is not in {args.corpus}"
                )

    completed = _load_progress(args.progress) if args.progress else {}
    scorer = _scorer_spec(args)
    options = _rerank_options(args)
    entries: dict[str, list[RunCandidate]] = {}
    for qid, candidates in run.entries.items():
        if qid in completed:
            entries[qid] = completed[qid]
            continue
        payload = {
            "passages": [
                {"id": p.id, "text": p.text, "title": p.title}
                for p in (corpus.lookup(c.docid) for c in candidates[: args.depth])
            ],
            "queries": _queries_payload([queries[qid]]),
            "run": _run_payload(RetrievalRun(entries={qid: candidates}, tag=run.tag)),
            "depth": args.depth,
            "scorer": scorer,
            "options": options,
        }
        reranked = _run_from_payload(client.post("/v1/rerank", payload)["run"])
        entries[qid] = reranked.entries[qid]
        if args.progress:
            _append_progress(args.progress, qid, entries[qid])

    out_run = RetrievalRun(entries=entries, tag=run.tag + RERANK_TAG_SUFFIX)
    header = _config_header(
        args,
        ["run", "corpus", "queries", "scorer", "direction", "depth",
         "batch-size", "parallel", "template", "instruction"],
    )
    atomic_write_text(args.out, format_run(out_run, _run_format(args.out, args.format), header))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, client: ServiceClient) -> int:
    if not args.qrels and not (args.queries and args.corpus):
        raise CliError(EXIT_USAGE, "eval needs --queries and --corpus, or --qrels")
    run = load_run(args.run, _run_format(args.run, None))
    rows: list[tuple[str, str]] = []
    if args.queries and args.corpus:
        corpus = ingest_passages(args.corpus, _corpus_format(args.corpus, args.corpus_format))
        queries = load_queries(args.queries)
        payload = {
            "run": _run_payload(run),
            "queries": _queries_payload(queries),
            "passages": _passages_payload(corpus),
            "ks": args.ks,
        }
        report = client.post("/v1/evaluate/accuracy", payload)
        for k in sorted(int(k) for k in report["fractions"]):
            rows.append((f"top{k}_accuracy", f"{report['fractions'][str(k)]:.6f}"))
        rows.append(("evaluated_queries", str(report["query_count"])))
        rows.append(("queries_without_answers", str(report["missing_answer_count"])))
    if args.qrels:
        qrels = load_qrels(args.qrels)
        payload = {
            "run": _run_payload(run),
            "qrels": qrels,
            "ndcg_k": args.ndcg_k,
            "recall_k": args.recall_k,
            "ndcg_gain": args.ndcg_gain,
        }
        report = client.post("/v1/evaluate/rank-metrics", payload)
        rows.append((f"ndcg@{args.ndcg_k}", f"{report['ndcg']['value']:.6f}"))
        rows.append((f"recall@{args.recall_k}", f"{report['recall']['value']:.6f}"))
        rows.append(("judged_queries", str(report["ndcg"]["evaluated"])))
        rows.append(("skipped_missing_from_qrels", str(report["ndcg"]["skipped_missing"])))
        rows.append(("skipped_without_positive_grade", str(report["ndcg"]["skipped_unjudged"])))
    header = _config_header(
        args, ["run", "queries", "corpus", "qrels", "ks", "ndcg-k", "ndcg-gain", "recall-k"]
    )
    lines = [f"# {text}" for text in header]
    lines.append("metric\tvalue")
    lines.extend(f"{name}\t{value}" for name, value in rows)
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_profile(args: argparse.Namespace, client: ServiceClient) -> int:
    corpus = ingest_passages(args.corpus, _corpus_format(args.corpus, args.corpus_format))
    queries = load_queries(args.queries)
    run = load_run(args.run, _run_format(args.run, None))
    payload = {
        "passages": _passages_payload(corpus),
        "queries": _queries_payload(queries),
        "run": _run_payload(run),
        "depths": args.depths,
        "scorer": _scorer_spec(args),
        "options": _rerank_options(args),
        "accuracy_k": args.accuracy_k,
    }
    report = client.post("/v1/profile", payload)
    header = _config_header(
        args,
        ["run", "corpus", "queries", "scorer", "direction", "depths",
         "accuracy-k", "batch-size", "parallel", "mock-delay"],
    )
    header.append(f"scorer-identity={report['scorer_identity']}")
    lines = [f"# {text}" for text in header]
    lines.append(f"depth\ttop{args.accuracy_k}_accuracy\tseconds_per_query")
    for row in report["rows"]:
        lines.append(f"{row['depth']}\t{row['accuracy']:.6f}\t{row['seconds_per_query']:.6f}")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="uprkit", description=__doc__)
    parser.add_argument("--server", default=os.environ.get(SERVER_ENV))
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_corpus(p, required=True):
        p.add_argument("--corpus", required=required)
        p.add_argument("--corpus-format", choices=["tsv", "jsonl"])

    def add_scorer(p):
        p.add_argument("--scorer", default=os.environ.get(SCORER_ENV, "mock"))
        p.add_argument("--mock-delay", type=float, default=0.0)
        p.add_argument(
            "--direction", choices=list(DIRECTION_FLAGS), default="q-given-p"
        )
        p.add_argument("--batch-size", type=int, default=32)
        p.add_argument("--parallel", type=int, default=1)
        p.add_argument("--template", default=None)
        p.add_argument("--instruction", default=None)

    p = sub.add_parser("index", help="build a BM25 index artifact from a corpus")
    add_corpus(p)
    p.add_argument("--k1", type=float, default=0.9)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--idf-variant", choices=["lucene", "robertson"], default="lucene")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_index)

    p = sub.add_parser("retrieve", help="run BM25 retrieval for a query file")
    add_corpus(p, required=False)
    p.add_argument("--index")
    p.add_argument("--queries", required=True)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--tag", default="bm25")
    p.add_argument("--k1", type=float, default=0.9)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--idf-variant", choices=["lucene", "robertson"], default="lucene")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["trec", "jsonl"])
    p.set_defaults(handler=cmd_retrieve)

    p = sub.add_parser("fuse", help="round-robin union of two or more runs")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["trec", "jsonl"])
    p.set_defaults(handler=cmd_fuse)

    p = sub.add_parser("rerank", help="re-rank a run by question-generation likelihood")
    p.add_argument("--run", required=True)
    add_corpus(p)
    p.add_argument("--queries", required=True)
    add_scorer(p)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--progress")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["trec", "jsonl"])
    p.set_defaults(handler=cmd_rerank)

    p = sub.add_parser("eval", help="top-K accuracy and/or nDCG and recall")
    p.add_argument("--run", required=True)
    p.add_argument("--queries")
    add_corpus(p, required=False)
    p.add_argument("--ks", type=_int_list, default=[1, 5, 20, 100])
    p.add_argument("--qrels")
    p.add_argument("--ndcg-k", type=int, default=10)
    p.add_argument("--ndcg-gain", choices=["exponential", "linear"], default="exponential")
    p.add_argument("--recall-k", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("profile", help="re-ranking accuracy and latency per candidate depth")
    p.add_argument("--run", required=True)
    add_corpus(p)
    p.add_argument("--queries", required=True)
    add_scorer(p)
    p.add_argument("--depths", type=_int_list, default=[100, 250, 500, 1000])
    p.add_argument("--accuracy-k", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_profile)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    client = ServiceClient(args.server)
    try:
        return args.handler(args, client)
    finally:
        client.close()


def main(argv: list[str] | None = None) -> int:
    try:
        return run_cli(argv)
    except CliError as exc:
        print(f"uprkit: error: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print(f"uprkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ScorerTransportError as exc:
        print(f"uprkit: error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (UprkitError, ValueError) as exc:
        print(f"uprkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
