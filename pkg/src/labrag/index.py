"""Dense (exact cosine) and sparse (BM25) indices over a chunk set, with
bit-exact persistence.

Dense search is deliberately brute force: the corpora this engine targets
are small enough that exactness is cheap, and it makes every ranking test
an oracle test. Ties are always broken by chunk_id ascending so that
experiments are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chunking import Chunk
from .embedding import EmbeddingProvider, embed_texts
from .errors import CorruptIndex, UnknownChunk, VersionMismatch, ZeroVector
from .tokens import tokenize

logger = logging.getLogger(__name__)

INDEX_VERSION = 1
DEFAULT_K1 = 1.5
DEFAULT_B = 0.75


@dataclass(frozen=True)
class ScoredHit:
    """One ranked result: 1-based rank, score non-increasing with rank."""

    chunk_id: str
    score: float
    rank: int


@dataclass
class VectorIndex:
    """Chunk embeddings in build order; zero-norm rows are flagged
    degenerate and never ranked."""

    chunks: list[Chunk]
    vectors: np.ndarray  # float32, shape (num_chunks, dimension)
    provider_name: str
    dimension: int

    def __post_init__(self) -> None:
        self._norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        self._degenerate = self._norms == 0.0
        self._by_id = {c.chunk_id: i for i, c in enumerate(self.chunks)}

    def __len__(self) -> int:
        return len(self.chunks)

    def chunk_by_id(self, chunk_id: str) -> Chunk:
        try:
            return self.chunks[self._by_id[chunk_id]]
        except KeyError:
            raise UnknownChunk(f"chunk id not in index: {chunk_id!r}") from None


def build_vector_index(chunks: list[Chunk], provider: EmbeddingProvider) -> VectorIndex:
    """Embed every chunk with ``provider``, preserving order."""
    if not chunks:
        raise ValueError("cannot build a vector index over zero chunks")
    vectors = embed_texts(provider, [c.text for c in chunks])
    matrix = np.stack(vectors).astype(np.float32)
    return VectorIndex(
        chunks=list(chunks),
        vectors=matrix,
        provider_name=provider.name,
        dimension=provider.dimension,
    )


def vector_topk(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[ScoredHit]:
    """Top-k rows by exact cosine similarity, ties by chunk_id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (index.dimension,):
        raise ValueError(f"query dimension {q.shape} does not match index ({index.dimension},)")
    q_norm = float(np.linalg.norm(q))
    if q_norm == 0.0:
        raise ZeroVector("query embedded to a zero vector")
    scores = index.vectors.astype(np.float64) @ q
    ranked: list[tuple[float, str, int]] = []
    for i in range(len(index.chunks)):
        if index._degenerate[i]:
            continue
        value = scores[i] / (index._norms[i] * q_norm)
        ranked.append((max(-1.0, min(1.0, value)), index.chunks[i].chunk_id, i))
    ranked.sort(key=lambda t: (-t[0], t[1]))
    return [
        ScoredHit(chunk_id=cid, score=score, rank=r + 1)
        for r, (score, cid, _) in enumerate(ranked[:k])
    ]


# ---------------------------------------------------------------------------
# BM25
# ---------------------------------------------------------------------------

@dataclass
class Bm25Index:
    """Corpus statistics for Okapi BM25 scoring over chunks."""

    chunk_ids: list[str]
    doc_freq: dict[str, int]
    doc_lengths: dict[str, int]
    avg_len: float
    num_chunks: int
    postings: dict[str, dict[int, int]]  # token -> {chunk_index: tf}
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def __post_init__(self) -> None:
        self._index_of = {cid: i for i, cid in enumerate(self.chunk_ids)}


def build_bm25_index(chunks: list[Chunk], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    """Compute document frequencies, lengths, and postings for ``chunks``."""
    if not chunks:
        raise ValueError("cannot build a BM25 index over zero chunks")
    postings: dict[str, dict[int, int]] = {}
    doc_lengths: dict[str, int] = {}
    for i, chunk in enumerate(chunks):
        tokens = tokenize(chunk.text)
        doc_lengths[chunk.chunk_id] = len(tokens)
        for token in tokens:
            postings.setdefault(token, {})
            postings[token][i] = postings[token].get(i, 0) + 1
    doc_freq = {token: len(entry) for token, entry in postings.items()}
    num_chunks = len(chunks)
    avg_len = sum(doc_lengths.values()) / num_chunks
    return Bm25Index(
        chunk_ids=[c.chunk_id for c in chunks],
        doc_freq=doc_freq,
        doc_lengths=doc_lengths,
        avg_len=avg_len,
        num_chunks=num_chunks,
        postings=postings,
        k1=k1,
        b=b,
    )


def _bm25_term_score(index: Bm25Index, token: str, chunk_idx: int) -> float:
    """Contribution of one query-token occurrence to one chunk's score."""
    df = index.doc_freq.get(token)
    if not df:
        return 0.0
    tf = index.postings[token].get(chunk_idx, 0)
    if tf == 0:
        return 0.0
    idf = math.log(index.num_chunks / df)
    length = index.doc_lengths[index.chunk_ids[chunk_idx]]
    denom = index.k1 * (1.0 - index.b + index.b * (length / index.avg_len)) + tf
    return idf * ((index.k1 + 1.0) * tf) / denom


def bm25_score(index: Bm25Index, query: str, chunk_id: str) -> float:
    """Retrieval status value of ``chunk_id`` for ``query``.

    Sums over query token occurrences: ln(N/df) * ((k1+1)*tf) /
    (k1*(1-b+b*(L_d/L_avg)) + tf); tokens absent from the chunk or the
    corpus contribute zero.
    """
    idx = index._index_of.get(chunk_id)
    if idx is None:
        raise UnknownChunk(f"chunk id not in index: {chunk_id!r}")
    return sum(_bm25_term_score(index, token, idx) for token in tokenize(query))


def bm25_topk(index: Bm25Index, query: str, k: int) -> list[ScoredHit]:
    """Top-k chunks with positive BM25 score, ties by chunk_id ascending.

    May return fewer than k hits; a query with no indexed tokens returns [].
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[int, float] = {}
    for token in tokenize(query):
        entry = index.postings.get(token)
        if not entry:
            continue
        for chunk_idx in entry:
            scores[chunk_idx] = scores.get(chunk_idx, 0.0) + _bm25_term_score(index, token, chunk_idx)
    ranked = sorted(
        ((score, index.chunk_ids[i]) for i, score in scores.items() if score > 0.0),
        key=lambda t: (-t[0], t[1]),
    )
    return [
        ScoredHit(chunk_id=cid, score=score, rank=r + 1)
        for r, (score, cid) in enumerate(ranked[:k])
    ]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

_MANIFEST = "manifest.json"
_CHUNKS = "chunks.jsonl"
_VECTORS = "vectors.f32"
_BM25 = "bm25.json"


def save_index(vindex: VectorIndex, bindex: Bm25Index, directory: str | Path) -> None:
    """Persist both indices; the round trip is bit-exact."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    vector_bytes = np.ascontiguousarray(vindex.vectors, dtype="<f4").tobytes()
    (directory / _VECTORS).write_bytes(vector_bytes)

    with (directory / _CHUNKS).open("w", encoding="utf-8") as fh:
        for chunk in vindex.chunks:
            fh.write(json.dumps(chunk.to_record(), ensure_ascii=False) + "\n")

    bm25_doc = {
        "doc_freq": bindex.doc_freq,
        "doc_lengths": bindex.doc_lengths,
        "avg_len": bindex.avg_len,
        "postings": {
            token: sorted([i, tf] for i, tf in entry.items())
            for token, entry in bindex.postings.items()
        },
    }
    (directory / _BM25).write_text(json.dumps(bm25_doc, ensure_ascii=False), encoding="utf-8")

    manifest = {
        "version": INDEX_VERSION,
        "provider": vindex.provider_name,
        "dimension": vindex.dimension,
        "num_chunks": len(vindex.chunks),
        "k1": bindex.k1,
        "b": bindex.b,
        "checksum": hashlib.sha256(vector_bytes).hexdigest(),
    }
    (directory / _MANIFEST).write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    logger.info("saved index (%d chunks, D=%d) to %s", len(vindex.chunks), vindex.dimension, directory)


def load_index(directory: str | Path) -> tuple[VectorIndex, Bm25Index]:
    """Load a persisted index directory, verifying shape and checksum."""
    directory = Path(directory)
    manifest_path = directory / _MANIFEST
    if not manifest_path.exists():
        raise CorruptIndex(f"no manifest in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptIndex(f"unreadable manifest: {exc}") from exc
    if manifest.get("version") != INDEX_VERSION:
        raise VersionMismatch(
            f"index version {manifest.get('version')!r}, engine supports {INDEX_VERSION}"
        )

    num_chunks = manifest["num_chunks"]
    dimension = manifest["dimension"]

    chunks: list[Chunk] = []
    with (directory / _CHUNKS).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                chunks.append(Chunk.from_record(json.loads(line)))
    if len(chunks) != num_chunks:
        raise CorruptIndex(
            f"manifest declares {num_chunks} chunks, chunk file has {len(chunks)}"
        )

    vector_bytes = (directory / _VECTORS).read_bytes()
    expected = num_chunks * dimension * 4
    if len(vector_bytes) != expected:
        raise CorruptIndex(
            f"vectors file is {len(vector_bytes)} bytes, expected {expected} "
            f"for {num_chunks}x{dimension} float32"
        )
    if hashlib.sha256(vector_bytes).hexdigest() != manifest["checksum"]:
        raise CorruptIndex("vectors file checksum mismatch")
    vectors = np.frombuffer(vector_bytes, dtype="<f4").reshape(num_chunks, dimension).copy()

    try:
        bm25_doc = json.loads((directory / _BM25).read_text(encoding="utf-8"))
        postings = {
            token: {int(i): int(tf) for i, tf in entry}
            for token, entry in bm25_doc["postings"].items()
        }
        bindex = Bm25Index(
            chunk_ids=[c.chunk_id for c in chunks],
            doc_freq={t: int(v) for t, v in bm25_doc["doc_freq"].items()},
            doc_lengths={cid: int(v) for cid, v in bm25_doc["doc_lengths"].items()},
            avg_len=float(bm25_doc["avg_len"]),
            num_chunks=num_chunks,
            postings=postings,
            k1=float(manifest["k1"]),
            b=float(manifest["b"]),
        )
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise CorruptIndex(f"unreadable BM25 statistics: {exc}") from exc
    if len(bindex.doc_lengths) != num_chunks:
        raise CorruptIndex("BM25 statistics do not cover every chunk")

    vindex = VectorIndex(
        chunks=chunks,
        vectors=vectors,
        provider_name=manifest["provider"],
        dimension=dimension,
    )
    return vindex, bindex
