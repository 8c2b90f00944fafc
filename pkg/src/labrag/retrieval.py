"""Query-time retrieval strategies: naive cosine top-k, similarity-threshold
reranking, and weighted reciprocal-rank fusion of dense and sparse lists.

Fusion is rank based rather than score based because cosine and BM25
scores are not commensurable; each retriever contributes
weight / (C + rank) and a chunk missing from a list contributes nothing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .chunking import Chunk
from .embedding import EmbeddingProvider, embed_texts
from .errors import ProviderMismatch
from .index import Bm25Index, ScoredHit, VectorIndex, bm25_topk, vector_topk

NAIVE = "naive"
RERANK = "rerank"
HYBRID = "hybrid"
STRATEGIES = (NAIVE, RERANK, HYBRID)

DEFAULT_K = 3
DEFAULT_RERANK_THRESHOLD = 0.40
DEFAULT_DENSE_WEIGHT = 0.3
DEFAULT_SPARSE_WEIGHT = 0.7
DEFAULT_FUSION_CONSTANT = 60.0


def default_candidate_pool(k: int) -> int:
    return max(4 * k, 20)


@dataclass
class RetrievalConfig:
    """Strategy selection and its knobs; weights must sum to 1."""

    strategy: str = NAIVE
    k: int = DEFAULT_K
    rerank_threshold: float = DEFAULT_RERANK_THRESHOLD
    dense_weight: float = DEFAULT_DENSE_WEIGHT
    sparse_weight: float = DEFAULT_SPARSE_WEIGHT
    fusion_constant: float = DEFAULT_FUSION_CONSTANT
    candidate_pool: int | None = None  # defaults to max(4k, 20)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown retrieval strategy: {self.strategy!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if abs(self.dense_weight + self.sparse_weight - 1.0) > 1e-9:
            raise ValueError("dense_weight + sparse_weight must equal 1")
        if not 0.0 <= self.rerank_threshold <= 1.0:
            raise ValueError("rerank_threshold must be in [0, 1]")
        if self.fusion_constant <= 0.0:
            raise ValueError("fusion_constant must be > 0")
        if self.candidate_pool is not None and self.candidate_pool < 1:
            raise ValueError("candidate_pool must be >= 1")

    def pool(self) -> int:
        return self.candidate_pool if self.candidate_pool is not None else default_candidate_pool(self.k)


@dataclass(frozen=True)
class RankedChunk:
    """A hit with its resolved chunk payload."""

    chunk: Chunk
    score: float
    rank: int


@dataclass
class RetrievalResult:
    query: str
    strategy: str
    hits: list[RankedChunk]
    timings_ms: dict[str, float] = field(default_factory=dict)


def _resolve(vindex: VectorIndex, hits: list[ScoredHit]) -> list[RankedChunk]:
    return [RankedChunk(chunk=vindex.chunk_by_id(h.chunk_id), score=h.score, rank=h.rank) for h in hits]


def _embed_query(query: str, vindex: VectorIndex, provider: EmbeddingProvider):
    if provider.name != vindex.provider_name:
        raise ProviderMismatch(
            f"index was built with provider {vindex.provider_name!r}, "
            f"queried with {provider.name!r}"
        )
    return embed_texts(provider, [query])[0]


def retrieve_naive(
    query: str,
    vindex: VectorIndex,
    provider: EmbeddingProvider,
    k: int = DEFAULT_K,
) -> RetrievalResult:
    """Rank by cosine similarity between query and chunk embeddings."""
    t0 = time.perf_counter()
    qvec = _embed_query(query, vindex, provider)
    t1 = time.perf_counter()
    hits = vector_topk(vindex, qvec, k)
    t2 = time.perf_counter()
    return RetrievalResult(
        query=query,
        strategy=NAIVE,
        hits=_resolve(vindex, hits),
        timings_ms={"embed": (t1 - t0) * 1e3, "dense": (t2 - t1) * 1e3},
    )


def retrieve_rerank(
    query: str,
    vindex: VectorIndex,
    provider: EmbeddingProvider,
    k: int = DEFAULT_K,
    threshold: float = DEFAULT_RERANK_THRESHOLD,
    candidate_pool: int | None = None,
) -> RetrievalResult:
    """Naive retrieval over a candidate pool, keeping only hits whose score
    strictly surpasses ``threshold``. May legitimately return zero hits."""
    pool = candidate_pool if candidate_pool is not None else default_candidate_pool(k)
    t0 = time.perf_counter()
    qvec = _embed_query(query, vindex, provider)
    t1 = time.perf_counter()
    candidates = vector_topk(vindex, qvec, pool)
    kept = [h for h in candidates if h.score > threshold][:k]
    hits = [ScoredHit(chunk_id=h.chunk_id, score=h.score, rank=r + 1) for r, h in enumerate(kept)]
    t2 = time.perf_counter()
    return RetrievalResult(
        query=query,
        strategy=RERANK,
        hits=_resolve(vindex, hits),
        timings_ms={"embed": (t1 - t0) * 1e3, "dense": (t2 - t1) * 1e3},
    )


def fuse_ranked(
    dense_ids: list[str],
    sparse_ids: list[str],
    dense_weight: float = DEFAULT_DENSE_WEIGHT,
    sparse_weight: float = DEFAULT_SPARSE_WEIGHT,
    fusion_constant: float = DEFAULT_FUSION_CONSTANT,
    k: int | None = None,
) -> list[tuple[str, float]]:
    """Weighted reciprocal-rank fusion of two rank lists (rank 1 first).

    fused(c) = dense_weight/(C + rank_dense(c)) + sparse_weight/(C + rank_sparse(c)),
    with missing entries contributing 0. Entries whose fused score is 0
    (possible only under a zero weight) are dropped; ties break by chunk id.
    """
    scores: dict[str, float] = {}
    for rank, cid in enumerate(dense_ids, start=1):
        scores[cid] = scores.get(cid, 0.0) + dense_weight / (fusion_constant + rank)
    for rank, cid in enumerate(sparse_ids, start=1):
        scores[cid] = scores.get(cid, 0.0) + sparse_weight / (fusion_constant + rank)
    fused = sorted(
        ((cid, s) for cid, s in scores.items() if s > 0.0),
        key=lambda t: (-t[1], t[0]),
    )
    return fused if k is None else fused[:k]


def retrieve_hybrid(
    query: str,
    vindex: VectorIndex,
    bindex: Bm25Index,
    provider: EmbeddingProvider,
    config: RetrievalConfig,
) -> RetrievalResult:
    """Fuse dense and sparse candidate lists with weighted reciprocal ranks.

    A query with zero sparse matches degrades gracefully to (weighted)
    dense-only ranking.
    """
    pool = config.pool()
    t0 = time.perf_counter()
    qvec = _embed_query(query, vindex, provider)
    t1 = time.perf_counter()
    dense = vector_topk(vindex, qvec, pool)
    t2 = time.perf_counter()
    sparse = bm25_topk(bindex, query, pool)
    t3 = time.perf_counter()
    fused = fuse_ranked(
        [h.chunk_id for h in dense],
        [h.chunk_id for h in sparse],
        dense_weight=config.dense_weight,
        sparse_weight=config.sparse_weight,
        fusion_constant=config.fusion_constant,
        k=config.k,
    )
    hits = [
        ScoredHit(chunk_id=cid, score=score, rank=r + 1)
        for r, (cid, score) in enumerate(fused)
    ]
    t4 = time.perf_counter()
    return RetrievalResult(
        query=query,
        strategy=HYBRID,
        hits=_resolve(vindex, hits),
        timings_ms={
            "embed": (t1 - t0) * 1e3,
            "dense": (t2 - t1) * 1e3,
            "sparse": (t3 - t2) * 1e3,
            "fuse": (t4 - t3) * 1e3,
        },
    )


def retrieve(
    query: str,
    vindex: VectorIndex,
    bindex: Bm25Index | None,
    provider: EmbeddingProvider,
    config: RetrievalConfig,
) -> RetrievalResult:
    """Dispatch to the configured strategy."""
    if config.strategy == NAIVE:
        return retrieve_naive(query, vindex, provider, config.k)
    if config.strategy == RERANK:
        return retrieve_rerank(
            query, vindex, provider, config.k, config.rerank_threshold, config.candidate_pool
        )
    if bindex is None:
        raise ValueError("hybrid retrieval requires a BM25 index")
    return retrieve_hybrid(query, vindex, bindex, provider, config)
