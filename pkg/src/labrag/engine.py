"""The query engine shared by the CLI and the HTTP service.

Both surfaces call :meth:`Engine.query` so that their payloads are
identical in content; the service layer adds no ranking logic.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

from .config import EngineConfig, build_generator, build_provider
from .corpus import Corpus, load_corpus
from .errors import ProviderMismatch
from .generation import DEFAULT_TEMPLATE_EN, assemble_prompt, generate_answer
from .index import Bm25Index, VectorIndex, load_index
from .retrieval import STRATEGIES, RetrievalConfig, retrieve

logger = logging.getLogger(__name__)


@dataclass
class GroundedAnswer:
    """An answer plus the chunk ids that grounded it."""

    question: str
    answer_text: str
    context_chunk_ids: list[str]
    prompt_chars: int


class Engine:
    """Loaded indices plus the configured model stack."""

    def __init__(
        self,
        config: EngineConfig,
        vindex: VectorIndex,
        bindex: Bm25Index,
        corpus: Corpus | None = None,
    ):
        self.config = config
        self.vindex = vindex
        self.bindex = bindex
        self.corpus = corpus
        self.provider = build_provider(config.provider)
        self.generator = build_generator(config.generator)
        if self.provider.name != vindex.provider_name:
            raise ProviderMismatch(
                f"configured provider {self.provider.name!r} does not match the "
                f"index provider {vindex.provider_name!r}"
            )
        self._titles = {d.id: d.title for d in corpus.documents} if corpus else {}
        self._categories = {d.id: d.category for d in corpus.documents} if corpus else {}

    @classmethod
    def from_config(cls, config: EngineConfig) -> "Engine":
        """Load the persisted index (and corpus metadata when available)."""
        if not config.index_dir:
            raise ValueError("engine config does not name an index directory")
        vindex, bindex = load_index(config.index_dir)
        corpus = None
        if config.corpus_path and Path(config.corpus_path).exists():
            corpus = load_corpus(config.corpus_path)
        return cls(config, vindex, bindex, corpus)

    def num_docs(self) -> int:
        if self.corpus is not None:
            return len(self.corpus)
        return len({c.doc_id for c in self.vindex.chunks})

    def retrieval_config(self, strategy: str | None = None, k: int | None = None) -> RetrievalConfig:
        base = self.config.retrieval
        return RetrievalConfig(
            strategy=strategy if strategy is not None else base.strategy,
            k=k if k is not None else base.k,
            rerank_threshold=base.rerank_threshold,
            dense_weight=base.dense_weight,
            sparse_weight=base.sparse_weight,
            fusion_constant=base.fusion_constant,
            candidate_pool=base.candidate_pool,
        )

    def query(
        self,
        question: str,
        strategy: str | None = None,
        k: int | None = None,
        generate: bool | None = None,
    ) -> dict:
        """Run one query; returns the payload served by POST /api/query."""
        if not question or not question.strip():
            raise ValueError("question must be non-empty")
        if strategy is not None and strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy: {strategy!r}")
        cfg = self.retrieval_config(strategy, k)
        do_generate = generate if generate is not None else self.config.generate_default

        result = retrieve(question, self.vindex, self.bindex, self.provider, cfg)
        payload: dict = {
            "chunks": [
                {
                    "chunk_id": rc.chunk.chunk_id,
                    "doc_id": rc.chunk.doc_id,
                    "title": self._titles.get(rc.chunk.doc_id, ""),
                    "category": self._categories.get(rc.chunk.doc_id, ""),
                    "text": rc.chunk.text,
                    "score": rc.score,
                    "rank": rc.rank,
                }
                for rc in result.hits
            ],
            "strategy": cfg.strategy,
            "k": cfg.k,
            "timings_ms": dict(result.timings_ms),
        }
        if do_generate:
            t0 = time.perf_counter()
            chunks = [rc.chunk for rc in result.hits]
            prompt = assemble_prompt(question, chunks, DEFAULT_TEMPLATE_EN, self._titles)
            answer = generate_answer(self.generator, prompt)
            payload["answer"] = answer
            payload["timings_ms"]["generate"] = (time.perf_counter() - t0) * 1e3
        return payload

    def grounded_answer(self, question: str, strategy: str | None = None, k: int | None = None) -> GroundedAnswer:
        """Generate an answer and report which chunks grounded it."""
        cfg = self.retrieval_config(strategy, k)
        result = retrieve(question, self.vindex, self.bindex, self.provider, cfg)
        chunks = [rc.chunk for rc in result.hits]
        prompt = assemble_prompt(question, chunks, DEFAULT_TEMPLATE_EN, self._titles)
        answer = generate_answer(self.generator, prompt)
        return GroundedAnswer(
            question=question,
            answer_text=answer,
            context_chunk_ids=[c.chunk_id for c in chunks],
            prompt_chars=len(prompt),
        )

    def health(self) -> dict:
        base = self.config.retrieval
        return {
            "status": "ok",
            "num_docs": self.num_docs(),
            "num_chunks": len(self.vindex.chunks),
            "provider": self.vindex.provider_name,
            "defaults": {
                "strategy": base.strategy,
                "k": base.k,
                "rerank_threshold": base.rerank_threshold,
                "dense_weight": base.dense_weight,
                "sparse_weight": base.sparse_weight,
                "generate": self.config.generate_default,
            },
        }


def empty_health() -> dict:
    """Health payload before any index is loaded."""
    return {
        "status": "no_index",
        "num_docs": 0,
        "num_chunks": 0,
        "provider": None,
        "defaults": {},
    }
