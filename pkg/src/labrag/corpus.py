"""Loading and validation of the protocol corpus and the QA benchmark.

Both arrive as UTF-8 JSONL; decoding is strict so that an encoding bug
fails loudly instead of silently corrupting every downstream index.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateId, MalformedLine, MissingField, UnknownDocument

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    """One laboratory protocol with its metadata."""

    id: str
    text: str
    category: str = ""
    title: str = ""
    keywords: tuple[str, ...] = ()
    extra: tuple[tuple[str, object], ...] = ()  # unknown input fields, preserved

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "text": self.text,
            "category": self.category,
            "title": self.title,
            "keywords": list(self.keywords),
        }
        rec.update(dict(self.extra))
        return rec


@dataclass(frozen=True)
class QAPair:
    """One benchmark item: question, gold answer, and its reference context."""

    question: str
    ground_truth: str
    reference_context: str
    source_doc_id: str


@dataclass
class Corpus:
    """An ordered, id-unique collection of documents."""

    documents: list[Document] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def get(self, doc_id: str) -> Document | None:
        return self._by_id().get(doc_id)

    def _by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}


def _decode_lines(path: Path):
    """Yield (line_number, decoded_line) pairs, strictly UTF-8."""
    raw = path.read_bytes()
    for lineno, line in enumerate(raw.split(b"\n"), start=1):
        if not line:
            continue
        try:
            yield lineno, line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(f"{path}:{lineno}: invalid UTF-8 ({exc})") from exc


def _parse_object(path: Path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"{path}:{lineno}: not valid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise MalformedLine(f"{path}:{lineno}: expected a JSON object")
    return obj


def _require_str(obj: dict, key: str, path: Path, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise MissingField(f"{path}:{lineno}: missing or empty field {key!r}")
    return value


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus file: one document object per line, order preserved."""
    path = Path(path)
    documents: list[Document] = []
    seen: set[str] = set()
    for lineno, line in _decode_lines(path):
        obj = _parse_object(path, lineno, line)
        doc_id = _require_str(obj, "id", path, lineno)
        text = _require_str(obj, "text", path, lineno)
        if doc_id in seen:
            raise DuplicateId(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        keywords = obj.get("keywords", [])
        if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
            raise MalformedLine(f"{path}:{lineno}: keywords must be a list of strings")
        category = obj.get("category", "")
        title = obj.get("title", "")
        if not isinstance(category, str) or not isinstance(title, str):
            raise MalformedLine(f"{path}:{lineno}: category and title must be strings")
        known = {"id", "text", "category", "title", "keywords"}
        extra = tuple((k, v) for k, v in obj.items() if k not in known)
        documents.append(
            Document(
                id=doc_id,
                text=text,
                category=category,
                title=title,
                keywords=tuple(keywords),
                extra=extra,
            )
        )
    logger.info("loaded %d documents from %s", len(documents), path)
    return Corpus(documents=documents)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to JSONL (inverse of :func:`load_corpus`)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")


def load_qa(path: str | Path, corpus: Corpus) -> list[QAPair]:
    """Load the QA benchmark, resolving each pair against the corpus."""
    path = Path(path)
    ids = {d.id for d in corpus.documents}
    pairs: list[QAPair] = []
    for lineno, line in _decode_lines(path):
        obj = _parse_object(path, lineno, line)
        pair = QAPair(
            question=_require_str(obj, "question", path, lineno),
            ground_truth=_require_str(obj, "ground_truth", path, lineno),
            reference_context=_require_str(obj, "reference_context", path, lineno),
            source_doc_id=_require_str(obj, "source_doc_id", path, lineno),
        )
        if pair.source_doc_id not in ids:
            raise UnknownDocument(
                f"{path}:{lineno}: source_doc_id {pair.source_doc_id!r} not in corpus"
            )
        pairs.append(pair)
    logger.info("loaded %d QA pairs from %s", len(pairs), path)
    return pairs
