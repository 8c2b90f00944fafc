"""Command line for the full lifecycle: ingest, chunk, index, query, eval,
and serve.

Exit codes: 0 success, 1 user or input error, 2 provider or infrastructure
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import report as report_mod
from .chunking import ChunkingConfig, chunk_corpus
from .config import (
    EngineConfig,
    GeneratorSpec,
    JudgeSpec,
    ProviderSpec,
    build_provider,
)
from .corpus import load_corpus, load_qa
from .engine import Engine
from .errors import (
    EmbeddingFailure,
    EngineError,
    GenerationFailure,
    JudgeFailure,
)
from .experiment import (
    ExperimentConfig,
    default_grid_path,
    load_grid,
    run_experiment,
    run_grid,
)
from .index import build_bm25_index, build_vector_index, load_index, save_index
from .retrieval import RetrievalConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER = 1
EXIT_INFRA = 2


def _add_chunking_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--strategy", dest="chunk_strategy", default="recursive",
                        choices=["recursive", "semantic"], help="chunking strategy")
    parser.add_argument("--target", type=int, default=512, help="target tokens per chunk (recursive)")
    parser.add_argument("--overlap", type=int, default=128, help="overlap tokens between chunks (recursive)")
    parser.add_argument("--min-chunk", type=int, default=128, help="minimum chunk tokens (semantic)")
    parser.add_argument("--percentile", type=float, default=95.0,
                        help="breakpoint distance percentile (semantic)")


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", default="hash", choices=["hash", "http"],
                        help="embedding provider kind")
    parser.add_argument("--provider-url", default="", help="base URL of the embedding server")
    parser.add_argument("--provider-name", default="", help="provider name recorded in the index")
    parser.add_argument("--dimension", type=int, default=384, help="embedding dimension")
    parser.add_argument("--seed", type=int, default=0, help="hash provider seed")


def _add_generator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--generator", default="stub", choices=["stub", "http"],
                        help="answer generator kind")
    parser.add_argument("--generator-url", default="", help="base URL of the generation server")


def _add_retrieval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--retrieval", dest="retrieval_strategy", default="naive",
                        choices=["naive", "rerank", "hybrid"], help="retrieval strategy")
    parser.add_argument("--k", type=int, default=3, help="number of chunks to retrieve")
    parser.add_argument("--threshold", type=float, default=0.40, help="rerank similarity threshold")
    parser.add_argument("--dense-weight", type=float, default=0.3, help="hybrid dense weight")
    parser.add_argument("--sparse-weight", type=float, default=0.7, help="hybrid sparse weight")


def _chunking_config(args: argparse.Namespace) -> ChunkingConfig:
    return ChunkingConfig(
        strategy=args.chunk_strategy,
        target_tokens=args.target,
        overlap_tokens=args.overlap,
        min_chunk_tokens=args.min_chunk,
        breakpoint_percentile=args.percentile,
    )


def _provider_spec(args: argparse.Namespace) -> ProviderSpec:
    return ProviderSpec(
        kind=args.provider,
        dimension=args.dimension,
        seed=args.seed,
        base_url=args.provider_url,
        name=args.provider_name,
    )


def _generator_spec(args: argparse.Namespace) -> GeneratorSpec:
    return GeneratorSpec(kind=args.generator, base_url=args.generator_url)


def _retrieval_config(args: argparse.Namespace) -> RetrievalConfig:
    return RetrievalConfig(
        strategy=args.retrieval_strategy,
        k=args.k,
        rerank_threshold=args.threshold,
        dense_weight=args.dense_weight,
        sparse_weight=args.sparse_weight,
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    print(f"corpus: {len(corpus)} documents from {args.corpus}")
    categories: dict[str, int] = {}
    for doc in corpus:
        categories[doc.category] = categories.get(doc.category, 0) + 1
    for category in sorted(categories):
        print(f"  {category or '(uncategorised)'}: {categories[category]}")
    if args.qa:
        pairs = load_qa(args.qa, corpus)
        print(f"qa benchmark: {len(pairs)} pairs from {args.qa}")
    return EXIT_OK


def cmd_chunk(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    config = _chunking_config(args)
    provider = build_provider(_provider_spec(args)) if config.strategy == "semantic" else None
    chunks = chunk_corpus(list(corpus.documents), config, provider)
    if args.out:
        with Path(args.out).open("w", encoding="utf-8") as fh:
            for chunk in chunks:
                fh.write(json.dumps(chunk.to_record(), ensure_ascii=False) + "\n")
        print(f"wrote {len(chunks)} chunks to {args.out}")
    print(report_mod.chunk_size_histogram([c.token_count for c in chunks]))
    return EXIT_OK


def cmd_index(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    config = _chunking_config(args)
    provider = build_provider(_provider_spec(args))
    chunks = chunk_corpus(list(corpus.documents), config, provider)
    vindex = build_vector_index(chunks, provider)
    bindex = build_bm25_index(chunks)
    save_index(vindex, bindex, args.out)
    print(f"indexed {len(corpus)} documents as {len(chunks)} chunks "
          f"({config.label()}, provider {provider.name}) -> {args.out}")
    print(report_mod.chunk_size_histogram([c.token_count for c in chunks]))
    return EXIT_OK


def _build_engine(args: argparse.Namespace) -> Engine:
    config = EngineConfig(
        corpus_path=args.corpus or "",
        index_dir=args.index,
        retrieval=_retrieval_config(args),
        provider=_provider_spec(args),
        generator=_generator_spec(args),
    )
    return Engine.from_config(config)


def cmd_query(args: argparse.Namespace) -> int:
    engine = _build_engine(args)
    payload = engine.query(args.question, generate=args.generate)
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
        return EXIT_OK
    if "answer" in payload:
        print(f"answer: {payload['answer']}\n")
    if not payload["chunks"]:
        print("no context above threshold" if payload["strategy"] == "rerank"
              else "no matching chunks")
        return EXIT_OK
    for chunk in payload["chunks"]:
        title = chunk["title"] or chunk["doc_id"]
        print(f"[{chunk['rank']}] {title} ({chunk['chunk_id']})  score={chunk['score']:.4f}")
        print(f"    {chunk['text'][:200].replace(chr(10), ' ')}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    qa = load_qa(args.qa, corpus)
    ks = tuple(int(x) for x in args.ks.split(","))
    out_dir = Path(args.out)

    if args.grid is not None:
        grid_path = Path(args.grid) if args.grid else default_grid_path()
        configs = load_grid(grid_path)
        for config in configs:
            config.ks = ks
        reports = run_grid(corpus, qa, configs)
    else:
        config = ExperimentConfig(
            experiment_id=args.experiment_id,
            description=f"{args.retrieval_strategy} - {_chunking_config(args).label()}",
            chunking=_chunking_config(args),
            retrieval=_retrieval_config(args),
            provider=_provider_spec(args),
            generator=_generator_spec(args),
            judge=JudgeSpec(kind=args.judge),
            ks=ks,
            topk_mode=args.topk_mode,
        )
        prebuilt = None
        if args.index:
            vindex, bindex = load_index(args.index)
            expected = config.provider.resolved_name()
            if vindex.provider_name != expected:
                print(f"error: index provider {vindex.provider_name!r} does not match "
                      f"configured provider {expected!r}", file=sys.stderr)
                return EXIT_USER
            prebuilt = (vindex.chunks, vindex, bindex)
        reports = [run_experiment(corpus, qa, config, prebuilt=prebuilt)]

    written = report_mod.write_outputs(
        reports, out_dir, include_runtime=args.timings, figures=not args.no_figures
    )
    print(report_mod.overall_table(reports))
    for rep in reports:
        print(f"\ntop-k results ({rep.experiment_id}):")
        print(report_mod.topk_table(rep))
        print(f"runtime: {rep.runtime_ms:.0f} ms")
    print(f"\nwrote {len(written)} files to {out_dir}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    if args.config:
        config = EngineConfig.from_file(args.config)
    else:
        config = EngineConfig(
            corpus_path=args.corpus or "",
            index_dir=args.index,
            retrieval=_retrieval_config(args),
            provider=_provider_spec(args),
            generator=_generator_spec(args),
            host=args.host,
            port=args.port,
            static_dir=args.static_dir,
        )
    engine = Engine.from_config(config) if config.index_dir else None
    app = create_app(engine, config.static_dir or None)
    print(f"serving on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labrag",
        description="Retrieval-augmented question answering over laboratory protocol corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a corpus (and optional QA) file")
    p_ingest.add_argument("--corpus", required=True)
    p_ingest.add_argument("--qa", default="")
    p_ingest.set_defaults(func=cmd_ingest)

    p_chunk = sub.add_parser("chunk", help="chunk a corpus and dump/inspect the result")
    p_chunk.add_argument("--corpus", required=True)
    p_chunk.add_argument("--out", default="", help="write the chunk dump JSONL here")
    _add_chunking_flags(p_chunk)
    _add_provider_flags(p_chunk)
    p_chunk.set_defaults(func=cmd_chunk)

    p_index = sub.add_parser("index", help="build and persist the dense and sparse indices")
    p_index.add_argument("--corpus", required=True)
    p_index.add_argument("--out", required=True, help="index directory to create")
    _add_chunking_flags(p_index)
    _add_provider_flags(p_index)
    p_index.set_defaults(func=cmd_index)

    p_query = sub.add_parser("query", help="ask one question against a persisted index")
    p_query.add_argument("question")
    p_query.add_argument("--index", required=True)
    p_query.add_argument("--corpus", default="", help="corpus file for document titles")
    p_query.add_argument("--generate", action="store_true", help="also generate an answer")
    p_query.add_argument("--json", action="store_true", help="machine-readable output")
    _add_retrieval_flags(p_query)
    _add_provider_flags(p_query)
    _add_generator_flags(p_query)
    p_query.set_defaults(func=cmd_query)

    p_eval = sub.add_parser("eval", help="run the evaluation harness over a QA benchmark")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--qa", required=True)
    p_eval.add_argument("--index", default="", help="reuse a persisted index (single run only)")
    p_eval.add_argument("--out", default="reports", help="output directory")
    p_eval.add_argument("--grid", nargs="?", const="", default=None,
                        help="run every experiment in a grid file (default: packaged grid)")
    p_eval.add_argument("--ks", default="1,2,4,8", help="comma-separated top-k cutoffs")
    p_eval.add_argument("--judge", default="containment", choices=["containment", "llm"])
    p_eval.add_argument("--topk-mode", default="token", choices=["token", "span"])
    p_eval.add_argument("--experiment-id", default="exp")
    p_eval.add_argument("--timings", action="store_true",
                        help="record wall-clock runtime in report files")
    p_eval.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    _add_chunking_flags(p_eval)
    _add_retrieval_flags(p_eval)
    _add_provider_flags(p_eval)
    _add_generator_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="serve the query API and web UI")
    p_serve.add_argument("--config", default="", help="engine config file (TOML or JSON)")
    p_serve.add_argument("--index", default="")
    p_serve.add_argument("--corpus", default="")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--static-dir", default="frontend/dist")
    _add_retrieval_flags(p_serve)
    _add_provider_flags(p_serve)
    _add_generator_flags(p_serve)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EmbeddingFailure, GenerationFailure, JudgeFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except (EngineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
