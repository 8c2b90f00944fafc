"""Document segmentation: the recursive and semantic chunking strategies.

All offsets are character offsets into the source document, and every
chunk's text is the exact document substring for its span, so chunk lists
can always be mapped back onto the original protocol.
"""

from __future__ import annotations

import re
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .corpus import Document
from .embedding import EmbeddingProvider, cosine_similarity, embed_texts
from .tokens import count_tokens, split_sentences, token_spans, tokenize  # noqa: F401 (re-export)

RECURSIVE = "recursive"
SEMANTIC = "semantic"


@dataclass(frozen=True)
class Chunk:
    """A contiguous span of one document, the unit of indexing and retrieval."""

    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    char_start: int
    char_end: int
    token_count: int

    def to_record(self) -> dict:
        """Chunk dump record (the JSONL persistence format)."""
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "char_start": self.char_start,
            "char_end": self.char_end,
            "token_count": self.token_count,
            "text": self.text,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Chunk":
        return cls(
            chunk_id=rec["chunk_id"],
            doc_id=rec["doc_id"],
            ordinal=rec["ordinal"],
            text=rec["text"],
            char_start=rec["char_start"],
            char_end=rec["char_end"],
            token_count=rec["token_count"],
        )


def _make_chunk(doc_id: str, ordinal: int, text: str, start: int, end: int) -> Chunk:
    piece = text[start:end]
    return Chunk(
        chunk_id=f"{doc_id}#{ordinal}",
        doc_id=doc_id,
        ordinal=ordinal,
        text=piece,
        char_start=start,
        char_end=end,
        token_count=count_tokens(piece),
    )


@dataclass
class ChunkingConfig:
    """Parameters for one chunking strategy.

    ``target_tokens``/``overlap_tokens`` apply to the recursive strategy;
    ``min_chunk_tokens``/``breakpoint_percentile`` to the semantic one.
    """

    strategy: str = RECURSIVE
    target_tokens: int = 512
    overlap_tokens: int = 128
    min_chunk_tokens: int = 128
    breakpoint_percentile: float = 95.0

    def __post_init__(self) -> None:
        if self.strategy not in (RECURSIVE, SEMANTIC):
            raise ValueError(f"unknown chunking strategy: {self.strategy!r}")
        if self.target_tokens < 1:
            raise ValueError("target_tokens must be >= 1")
        if self.overlap_tokens < 0 or self.overlap_tokens >= self.target_tokens:
            raise ValueError("overlap_tokens must satisfy 0 <= overlap < target")
        if self.min_chunk_tokens < 1:
            raise ValueError("min_chunk_tokens must be >= 1")
        if not 0.0 < self.breakpoint_percentile <= 100.0:
            raise ValueError("breakpoint_percentile must be in (0, 100]")

    def label(self) -> str:
        if self.strategy == RECURSIVE:
            return f"recursive-{self.target_tokens}/{self.overlap_tokens}"
        return f"semantic-p{self.breakpoint_percentile:g}-min{self.min_chunk_tokens}"


# ---------------------------------------------------------------------------
# Recursive strategy
# ---------------------------------------------------------------------------

_PARAGRAPH_RE = re.compile(r"\n{2,}")
_LINE_RE = re.compile(r"\n")
_WHITESPACE_RE = re.compile(r"\s+")


class _TokenMap:
    """Precomputed token spans of a document, for O(log n) span counting.

    Valid because every candidate cut position falls on whitespace or on a
    token boundary, so no token ever straddles a cut.
    """

    def __init__(self, text: str):
        self.spans = token_spans(text)
        self.starts = [s for s, _ in self.spans]

    def count(self, lo: int, hi: int) -> int:
        return bisect_left(self.starts, hi) - bisect_left(self.starts, lo)

    def tokens_before(self, pos: int) -> int:
        return bisect_left(self.starts, pos)


def _regex_cuts(pattern: re.Pattern, text: str, lo: int, hi: int) -> list[int]:
    """Cut positions after each separator match, strictly inside (lo, hi)."""
    return [m.end() for m in pattern.finditer(text, lo, hi) if lo < m.end() < hi]


def _sentence_cuts(text: str, lo: int, hi: int) -> list[int]:
    spans = split_sentences(text[lo:hi])
    return [lo + end for _, _, end in spans[:-1]]


def _token_boundary_cuts(tm: _TokenMap, lo: int, hi: int) -> list[int]:
    cuts = []
    for k in range(bisect_left(tm.starts, lo), len(tm.spans)):
        s, e = tm.spans[k]
        if s >= hi:
            break
        if lo < e < hi:
            cuts.append(e)
    return cuts


def _cuts_at_level(level: int, text: str, tm: _TokenMap, lo: int, hi: int) -> list[int]:
    if level == 0:
        return _regex_cuts(_PARAGRAPH_RE, text, lo, hi)
    if level == 1:
        return _regex_cuts(_LINE_RE, text, lo, hi)
    if level == 2:
        return _sentence_cuts(text, lo, hi)
    if level == 3:
        return _regex_cuts(_WHITESPACE_RE, text, lo, hi)
    return _token_boundary_cuts(tm, lo, hi)


_NUM_LEVELS = 5


def _atomize(text: str, tm: _TokenMap, lo: int, hi: int, target: int, level: int) -> list[tuple[int, int]]:
    """Split [lo, hi) into spans of <= target tokens, cutting at the
    highest-priority separator available (paragraph > line > sentence >
    whitespace > token boundary). A span with no cut at any level is
    returned whole regardless of size."""
    if tm.count(lo, hi) <= target:
        return [(lo, hi)]
    cuts: list[int] = []
    while level < _NUM_LEVELS:
        cuts = _cuts_at_level(level, text, tm, lo, hi)
        level += 1
        if cuts:
            break
    if not cuts:
        return [(lo, hi)]  # indivisible run
    atoms: list[tuple[int, int]] = []
    edges = [lo] + cuts + [hi]
    for a, b in zip(edges, edges[1:]):
        if tm.count(a, b) > target:
            atoms.extend(_atomize(text, tm, a, b, target, level))
        else:
            atoms.append((a, b))
    return atoms


def _pack(tm: _TokenMap, atoms: list[tuple[int, int]], target: int) -> list[tuple[int, int]]:
    """Greedily merge adjacent atoms while the merged span stays <= target."""
    segments: list[tuple[int, int]] = []
    cur_lo, cur_hi = atoms[0]
    for a, b in atoms[1:]:
        if tm.count(cur_lo, b) <= target:
            cur_hi = b
        else:
            segments.append((cur_lo, cur_hi))
            cur_lo, cur_hi = a, b
    segments.append((cur_lo, cur_hi))
    return segments


def chunk_recursive(doc: Document, config: ChunkingConfig) -> list[Chunk]:
    """Length-bounded splitting along the separator hierarchy.

    Base segments partition the document into spans of at most
    ``target_tokens`` tokens; each chunk after the first is then extended
    backwards to re-emit the trailing ``overlap_tokens`` tokens of the
    previous segment, so an emitted chunk may carry up to target + overlap
    tokens while offsets stay true document offsets.
    """
    text = doc.text
    if not text:
        return []
    tm = _TokenMap(text)
    atoms = _atomize(text, tm, 0, len(text), config.target_tokens, 0)
    segments = _pack(tm, atoms, config.target_tokens)

    chunks: list[Chunk] = []
    for i, (seg_lo, seg_hi) in enumerate(segments):
        start = seg_lo
        if i > 0 and config.overlap_tokens > 0:
            k = max(0, tm.tokens_before(seg_lo) - config.overlap_tokens)
            if k < len(tm.spans) and tm.spans[k][0] < seg_lo:
                start = max(segments[i - 1][0], tm.spans[k][0])
        chunks.append(_make_chunk(doc.id, i, text, start, seg_hi))
    return chunks


# ---------------------------------------------------------------------------
# Semantic strategy
# ---------------------------------------------------------------------------

def chunk_semantic(doc: Document, config: ChunkingConfig, embedder: EmbeddingProvider) -> list[Chunk]:
    """Split at embedding-distance anomalies between adjacent sentence windows.

    Each sentence is embedded together with one buffered neighbor on each
    side; a breakpoint is placed wherever the cosine distance between
    consecutive windows strictly exceeds the configured percentile of all
    distances (linear interpolation). Segments below ``min_chunk_tokens``
    merge into their successor (into the predecessor when last). No upper
    size bound applies.
    """
    text = doc.text
    if not text:
        return []
    sentences = split_sentences(text)
    if not sentences:
        return []

    breakpoints: list[int] = []
    if len(sentences) > 1:
        windows = []
        for i in range(len(sentences)):
            w_lo = sentences[max(0, i - 1)][1]
            w_hi = sentences[min(len(sentences) - 1, i + 1)][2]
            windows.append(text[w_lo:w_hi])
        vectors = embed_texts(embedder, windows)
        distances = np.empty(len(sentences) - 1, dtype=np.float64)
        for i in range(len(sentences) - 1):
            a, b = vectors[i], vectors[i + 1]
            if not np.any(a) or not np.any(b):
                distances[i] = 0.0  # blank window: no evidence of a shift
            else:
                distances[i] = 1.0 - cosine_similarity(a, b)
        threshold = float(np.percentile(distances, config.breakpoint_percentile))
        breakpoints = [i for i, d in enumerate(distances) if d > threshold]

    # Sentence index ranges per segment; a breakpoint after sentence i ends
    # the current segment at i.
    segments: list[tuple[int, int]] = []
    seg_start = 0
    for bp in breakpoints:
        segments.append((seg_start, bp + 1))
        seg_start = bp + 1
    segments.append((seg_start, len(sentences)))

    def seg_token_count(lo: int, hi: int) -> int:
        return count_tokens(text[sentences[lo][1]:sentences[hi - 1][2]])

    merged: list[tuple[int, int]] = []
    cur: tuple[int, int] | None = None
    for lo, hi in segments:
        cur = (cur[0], hi) if cur else (lo, hi)
        if seg_token_count(*cur) >= config.min_chunk_tokens:
            merged.append(cur)
            cur = None
    if cur is not None:
        if merged:
            merged[-1] = (merged[-1][0], cur[1])
        else:
            merged.append(cur)

    return [
        _make_chunk(doc.id, i, text, sentences[lo][1], sentences[hi - 1][2])
        for i, (lo, hi) in enumerate(merged)
    ]


def chunk_document(
    doc: Document,
    config: ChunkingConfig,
    embedder: EmbeddingProvider | None = None,
) -> list[Chunk]:
    """Dispatch to the configured strategy."""
    if config.strategy == SEMANTIC:
        if embedder is None:
            raise ValueError("semantic chunking requires an embedding provider")
        return chunk_semantic(doc, config, embedder)
    return chunk_recursive(doc, config)


def chunk_corpus(
    docs: list[Document],
    config: ChunkingConfig,
    embedder: EmbeddingProvider | None = None,
) -> list[Chunk]:
    """Chunk every document, concatenating per-document lists in corpus order."""
    out: list[Chunk] = []
    for doc in docs:
        out.extend(chunk_document(doc, config, embedder))
    return out
