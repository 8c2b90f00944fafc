"""Deterministic tokenizer and sentence splitter shared by chunking,
BM25 statistics, the hash embedder, and the overlap metrics."""

from __future__ import annotations

import re

# A token is a maximal run of letters-or-digits, or any single other
# non-whitespace character. Underscore counts as a symbol, not a word char.
_TOKEN_RE = re.compile(r"[^\W_]+|[^\w\s]|_", re.UNICODE)

_SENTENCE_TERMINALS = ".!?"


def tokenize(text: str) -> list[str]:
    """Lowercased tokens of ``text``."""
    return [m.group().lower() for m in _TOKEN_RE.finditer(text)]


def token_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) character spans of each token, in document order."""
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def count_tokens(text: str) -> int:
    """Number of tokens in ``text``; 0 for empty or whitespace-only input."""
    return sum(1 for _ in _TOKEN_RE.finditer(text))


def content_tokens(text: str) -> set[str]:
    """Token set restricted to letter/digit runs (punctuation dropped)."""
    return {t for t in tokenize(text) if any(c.isalnum() for c in t)}


def split_sentences(text: str) -> list[tuple[str, int, int]]:
    """Split ``text`` into sentence spans covering it exactly.

    A boundary occurs after '.', '!', '?' or a newline when the next
    character is whitespace or uppercase; the whitespace run that follows
    the terminal attaches to the preceding sentence. Returns a list of
    (sentence_text, char_start, char_end) with contiguous spans.
    """
    n = len(text)
    spans: list[tuple[str, int, int]] = []
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch in _SENTENCE_TERMINALS or ch == "\n":
            j = i + 1
            if j < n and (text[j].isspace() or text[j].isupper()):
                while j < n and text[j].isspace():
                    j += 1
                spans.append((text[start:j], start, j))
                start = j
                i = j
                continue
        i += 1
    if start < n:
        spans.append((text[start:n], start, n))
    return spans
