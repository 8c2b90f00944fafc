"""Answer and retrieval quality metrics.

The judged metrics (faithfulness, answer relevance, context recall) run
behind a pluggable judge: a deterministic token-containment judge for
offline use, or an LLM-backed judge that drives any Generator through
fixed prompt templates. The top-k metrics are judge-free token-overlap
measurements.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from .chunking import Chunk
from .embedding import EmbeddingProvider, cosine_similarity, embed_texts
from .errors import JudgeFailure
from .generation import Generator
from .tokens import content_tokens, split_sentences, tokenize

DEFAULT_TAU = 0.8
DEFAULT_KS = (1, 2, 4, 8)
DEFAULT_RELEVANCE_QUESTIONS = 3


class Judge(ABC):
    """Verdict provider for the judged metrics."""

    name: str

    @abstractmethod
    def decompose(self, answer: str) -> list[str]:
        """At least one statement for any non-empty answer."""

    @abstractmethod
    def is_supported(self, statement: str, contexts: list[str]) -> bool:
        """Whether the statement is grounded in the contexts."""

    @abstractmethod
    def is_relevant(self, chunk_text: str, reference: str) -> bool:
        """Whether a retrieved chunk is relevant to the reference context."""

    @abstractmethod
    def generate_questions(self, answer: str, n: int) -> list[str]:
        """Exactly n questions the answer would respond to."""


def _sentences_of(text: str) -> list[str]:
    return [s.strip() for s, _, _ in split_sentences(text) if s.strip()]


class ContainmentJudge(Judge):
    """Deterministic judge: statements are the answer's sentences, and a
    statement (or reference) counts as contained when at least ``tau`` of
    its content tokens appear in the other side."""

    def __init__(self, tau: float = DEFAULT_TAU):
        if not 0.0 < tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        self.tau = tau
        self.name = f"containment-{tau:g}"

    def decompose(self, answer: str) -> list[str]:
        return _sentences_of(answer) or [answer]

    def is_supported(self, statement: str, contexts: list[str]) -> bool:
        tokens = content_tokens(statement)
        if not tokens:
            return True
        pool = content_tokens(" ".join(contexts))
        return len(tokens & pool) / len(tokens) >= self.tau

    def is_relevant(self, chunk_text: str, reference: str) -> bool:
        tokens = content_tokens(reference)
        if not tokens:
            return True
        pool = content_tokens(chunk_text)
        return len(tokens & pool) / len(tokens) >= self.tau

    def generate_questions(self, answer: str, n: int) -> list[str]:
        sentences = _sentences_of(answer) or [answer]
        return [sentences[i % len(sentences)] for i in range(n)]


DECOMPOSE_PROMPT = """Break the following answer into short standalone factual statements.
Write one statement per line and nothing else.

Answer:
{answer}
"""

SUPPORT_PROMPT = """Context:
{context}

Statement: {statement}

Is the statement fully supported by the context above? Reply with exactly YES or NO.
"""

RELEVANCE_PROMPT = """Reference:
{reference}

Passage:
{passage}

Is the passage relevant to the reference above? Reply with exactly YES or NO.
"""

QUESTION_PROMPT = """Write {n} different questions that the following answer would be a good answer to.
Write one question per line and nothing else.

Answer:
{answer}
"""


class LlmJudge(Judge):
    """Judge that drives a Generator through fixed prompt templates."""

    def __init__(self, generator: Generator, max_tokens: int = 512):
        self.generator = generator
        self.max_tokens = max_tokens
        self.name = f"llm-{generator.name}"

    def _lines(self, prompt: str) -> list[str]:
        text = self.generator.generate(prompt, max_tokens=self.max_tokens)
        lines = []
        for line in text.splitlines():
            line = line.strip().lstrip("-*•").strip()
            if line and line[0].isdigit():
                line = line.lstrip("0123456789.)( ").strip()
            if line:
                lines.append(line)
        return lines

    def decompose(self, answer: str) -> list[str]:
        lines = self._lines(DECOMPOSE_PROMPT.format(answer=answer))
        if not lines:
            raise JudgeFailure("judge produced no statements")
        return lines

    def _verdict(self, prompt: str) -> bool:
        text = self.generator.generate(prompt, max_tokens=8).strip().upper()
        if text.startswith("YES"):
            return True
        if text.startswith("NO"):
            return False
        raise JudgeFailure(f"judge verdict was neither YES nor NO: {text[:40]!r}")

    def is_supported(self, statement: str, contexts: list[str]) -> bool:
        return self._verdict(
            SUPPORT_PROMPT.format(context="\n\n".join(contexts), statement=statement)
        )

    def is_relevant(self, chunk_text: str, reference: str) -> bool:
        return self._verdict(RELEVANCE_PROMPT.format(reference=reference, passage=chunk_text))

    def generate_questions(self, answer: str, n: int) -> list[str]:
        lines = self._lines(QUESTION_PROMPT.format(n=n, answer=answer))
        if not lines:
            raise JudgeFailure("judge produced no questions")
        return [lines[i % len(lines)] for i in range(n)]


# ---------------------------------------------------------------------------
# Judged metrics
# ---------------------------------------------------------------------------

def faithfulness(answer: str, contexts: list[str], judge: Judge) -> float:
    """Fraction of the answer's statements supported by the contexts."""
    if not answer:
        raise ValueError("answer must be non-empty")
    statements = judge.decompose(answer)
    if not statements:
        raise JudgeFailure("judge returned no statements for a non-empty answer")
    supported = sum(1 for s in statements if judge.is_supported(s, contexts))
    return supported / len(statements)


def answer_relevance(
    question: str,
    answer: str,
    judge: Judge,
    provider: EmbeddingProvider,
    n: int = DEFAULT_RELEVANCE_QUESTIONS,
) -> float:
    """Mean cosine similarity between the question and n questions the
    judge regenerates from the answer."""
    if n < 1:
        raise ValueError("n must be >= 1")
    generated = judge.generate_questions(answer, n)
    if len(generated) != n:
        raise JudgeFailure(f"judge returned {len(generated)} questions, expected {n}")
    vectors = embed_texts(provider, [question] + generated)
    total = 0.0
    for vec in vectors[1:]:
        total += cosine_similarity(vectors[0], vec)
    return total / n


def context_recall(retrieved: list[str], reference: str, judge: Judge) -> float:
    """Fraction of retrieved chunks the judge marks relevant to the reference."""
    if not retrieved:
        raise ValueError("retrieved must be non-empty")
    relevant = sum(1 for text in retrieved if judge.is_relevant(text, reference))
    return relevant / len(retrieved)


# ---------------------------------------------------------------------------
# Deterministic top-k metrics
# ---------------------------------------------------------------------------

def harmonic_mean(p: float, r: float) -> float:
    """F1: zero when both inputs are zero."""
    if p == 0.0 and r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def topk_metrics(
    retrieved_ranked: list[Chunk],
    reference: str,
    ks: tuple[int, ...] | list[int] = DEFAULT_KS,
) -> tuple[dict[int, float], dict[int, float], dict[int, float]]:
    """Token-overlap precision/recall/F1 at each cutoff.

    For each k, R is the token set of the first min(k, len) chunks and G
    the token set of the reference; precision = |R∩G| / |R| (0 when R is
    empty), recall = |R∩G| / |G|.
    """
    if not ks or any(k < 1 for k in ks):
        raise ValueError("ks must be non-empty with every k >= 1")
    goal = set(tokenize(reference))
    precision_at: dict[int, float] = {}
    recall_at: dict[int, float] = {}
    f1_at: dict[int, float] = {}
    chunk_tokens = [set(tokenize(c.text)) for c in retrieved_ranked]
    for k in ks:
        pool: set[str] = set()
        for tokens in chunk_tokens[: min(k, len(chunk_tokens))]:
            pool |= tokens
        hit = len(pool & goal)
        p = hit / len(pool) if pool else 0.0
        r = hit / len(goal) if goal else 0.0
        precision_at[k] = p
        recall_at[k] = r
        f1_at[k] = harmonic_mean(p, r)
    return precision_at, recall_at, f1_at


def topk_metrics_span(
    retrieved_ranked: list[Chunk],
    ref_doc_id: str,
    ref_start: int,
    ref_end: int,
    ks: tuple[int, ...] | list[int] = DEFAULT_KS,
) -> tuple[dict[int, float], dict[int, float], dict[int, float]]:
    """Strict span-overlap alternative to :func:`topk_metrics`.

    Precision = fraction of the first k chunks whose span intersects the
    reference span; recall = fraction of reference characters covered by
    their union.
    """
    if not ks or any(k < 1 for k in ks):
        raise ValueError("ks must be non-empty with every k >= 1")
    if ref_end <= ref_start:
        raise ValueError("reference span must be non-empty")
    precision_at: dict[int, float] = {}
    recall_at: dict[int, float] = {}
    f1_at: dict[int, float] = {}
    ref_len = ref_end - ref_start
    for k in ks:
        top = retrieved_ranked[: min(k, len(retrieved_ranked))]
        overlaps = [
            (max(c.char_start, ref_start), min(c.char_end, ref_end))
            for c in top
            if c.doc_id == ref_doc_id and c.char_start < ref_end and c.char_end > ref_start
        ]
        covered: set[int] = set()
        for lo, hi in overlaps:
            covered.update(range(lo, hi))
        p = len(overlaps) / len(top) if top else 0.0
        r = len(covered) / ref_len
        precision_at[k] = p
        recall_at[k] = r
        f1_at[k] = harmonic_mean(p, r)
    return precision_at, recall_at, f1_at


@dataclass
class MetricRow:
    """All metric values for one benchmark question; judged metrics are
    None when their computation failed (see ``errors``)."""

    question_id: int
    faithfulness: float | None = None
    answer_relevance: float | None = None
    context_recall: float | None = None
    precision_at: dict[int, float] = field(default_factory=dict)
    recall_at: dict[int, float] = field(default_factory=dict)
    f1_at: dict[int, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    def to_record(self) -> dict:
        rec: dict = {
            "question_id": self.question_id,
            "faithfulness": self.faithfulness,
            "answer_relevance": self.answer_relevance,
            "context_recall": self.context_recall,
            "precision_at": {str(k): v for k, v in self.precision_at.items()},
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
            "f1_at": {str(k): v for k, v in self.f1_at.items()},
        }
        if self.errors:
            rec["errors"] = self.errors
        return rec


def aggregate_rows(rows: list[MetricRow], ks: tuple[int, ...] | list[int]) -> dict:
    """Arithmetic means over rows where each metric is present."""

    def mean_of(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    agg: dict = {
        "faithfulness": mean_of([r.faithfulness for r in rows if r.faithfulness is not None]),
        "answer_relevance": mean_of(
            [r.answer_relevance for r in rows if r.answer_relevance is not None]
        ),
        "context_recall": mean_of(
            [r.context_recall for r in rows if r.context_recall is not None]
        ),
        "precision_at": {},
        "recall_at": {},
        "f1_at": {},
    }
    for k in ks:
        agg["precision_at"][str(k)] = mean_of([r.precision_at[k] for r in rows if k in r.precision_at])
        agg["recall_at"][str(k)] = mean_of([r.recall_at[k] for r in rows if k in r.recall_at])
        agg["f1_at"][str(k)] = mean_of([r.f1_at[k] for r in rows if k in r.f1_at])
    return agg
