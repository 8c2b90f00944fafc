"""Grounded prompt assembly and pluggable answer generation.

The extractive stub makes the whole pipeline runnable offline: it answers
with the context sentence sharing the most tokens with the question, so
its answers are verbatim context material by construction.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from typing import Mapping

import requests

from .chunking import Chunk
from .errors import GenerationFailure, TemplateError
from .tokens import content_tokens, split_sentences

NO_CONTEXT_ANSWER = "NO_CONTEXT"

CONTEXT_HEADER = "Context:"
QUESTION_HEADER = "Question:"

DEFAULT_TEMPLATE_EN = """You are an assistant for laboratory protocol questions.
Answer using only the information in the context below.
If the context section is empty, reply exactly NO_CONTEXT.

Context:
{context}

Question: {question}
Answer:"""

DEFAULT_TEMPLATE_PT = """Es um assistente para questoes sobre protocolos laboratoriais.
Responde usando apenas a informacao do contexto abaixo.
Se a seccao de contexto estiver vazia, responde exatamente NO_CONTEXT.

Context:
{context}

Question: {question}
Answer:"""


def assemble_prompt(
    question: str,
    hits: list[Chunk],
    template: str = DEFAULT_TEMPLATE_EN,
    titles: Mapping[str, str] | None = None,
) -> str:
    """Fill ``template`` with the question and the retrieved contexts.

    Contexts are concatenated in rank order, each prefixed by a source line
    "[doc_id · title]". Each placeholder is substituted exactly once.
    """
    ctx_pos = template.find("{context}")
    q_pos = template.find("{question}")
    if ctx_pos < 0:
        raise TemplateError("template lacks the {context} placeholder")
    if q_pos < 0:
        raise TemplateError("template lacks the {question} placeholder")

    titles = titles or {}
    blocks = []
    for chunk in hits:
        title = titles.get(chunk.doc_id, "")
        blocks.append(f"[{chunk.doc_id} · {title}]\n{chunk.text}")
    context_block = "\n\n".join(blocks)

    # Substitute both placeholders against their positions in the original
    # template so neither value can be re-substituted.
    pieces = []
    cursor = 0
    for pos, token, value in sorted(
        [(ctx_pos, "{context}", context_block), (q_pos, "{question}", question)]
    ):
        pieces.append(template[cursor:pos])
        pieces.append(value)
        cursor = pos + len(token)
    pieces.append(template[cursor:])
    return "".join(pieces)


class Generator(ABC):
    """Answer generator contract. External generators need not be
    deterministic; the extractive stub is."""

    name: str

    @abstractmethod
    def generate(self, prompt: str, max_tokens: int = 512) -> str:
        """Produce an answer for ``prompt``."""


def generate_answer(gen: Generator, prompt: str, max_tokens: int = 512) -> str:
    """Run the generator, guaranteeing a non-empty answer or a failure."""
    if not prompt:
        raise ValueError("prompt must be non-empty")
    answer = gen.generate(prompt, max_tokens=max_tokens)
    if not answer or not answer.strip():
        raise GenerationFailure(f"generator {gen.name!r} returned empty output")
    return answer


class ExtractiveStubGenerator(Generator):
    """Deterministic offline generator.

    Parses the prompt's "Context:" .. "Question:" sections, then answers
    with the context sentence that shares the most content tokens with the
    question (earliest sentence on ties), or NO_CONTEXT when the context
    section is empty.
    """

    name = "extractive-stub"

    def generate(self, prompt: str, max_tokens: int = 512) -> str:
        context, question = self._parse(prompt)
        if not context.strip():
            return NO_CONTEXT_ANSWER
        question_tokens = content_tokens(question)
        best_sentence = None
        best_overlap = -1
        for sentence, _, _ in split_sentences(context):
            stripped = sentence.strip()
            if not stripped or self._is_source_marker(stripped):
                continue
            overlap = len(question_tokens & content_tokens(sentence))
            if overlap > best_overlap:
                best_overlap = overlap
                best_sentence = stripped
        if best_sentence is None:
            return NO_CONTEXT_ANSWER
        return best_sentence

    @staticmethod
    def _is_source_marker(line: str) -> bool:
        return line.startswith("[") and line.endswith("]") and " · " in line

    @staticmethod
    def _parse(prompt: str) -> tuple[str, str]:
        ctx_at = prompt.find(CONTEXT_HEADER)
        q_at = prompt.rfind(QUESTION_HEADER)
        if ctx_at < 0 or q_at < 0 or q_at <= ctx_at:
            raise GenerationFailure(
                "extractive stub requires a prompt with 'Context:' and 'Question:' sections"
            )
        context = prompt[ctx_at + len(CONTEXT_HEADER):q_at]
        question = prompt[q_at + len(QUESTION_HEADER):]
        answer_at = question.find("\nAnswer:")
        if answer_at >= 0:
            question = question[:answer_at]
        return context, question


class HttpGenerator(Generator):
    """Client for a generation server speaking the engine wire protocol:
    POST {base_url}/generate {"prompt", "max_tokens"} -> {"text"}."""

    def __init__(
        self,
        base_url: str,
        name: str = "http-generator",
        timeout: float = 120.0,
        max_concurrency: int = 2,
    ):
        self.base_url = base_url.rstrip("/")
        self.name = name
        self.timeout = timeout
        self._gate = threading.Semaphore(max_concurrency)

    def generate(self, prompt: str, max_tokens: int = 512) -> str:
        try:
            with self._gate:
                resp = requests.post(
                    f"{self.base_url}/generate",
                    json={"prompt": prompt, "max_tokens": max_tokens},
                    timeout=self.timeout,
                )
        except requests.RequestException as exc:
            raise GenerationFailure(f"generation server unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise GenerationFailure(f"generation server returned HTTP {resp.status_code}")
        try:
            text = resp.json()["text"]
        except (ValueError, KeyError) as exc:
            raise GenerationFailure(f"malformed generation response: {exc}") from exc
        if not isinstance(text, str):
            raise GenerationFailure("malformed generation response: 'text' is not a string")
        return text
