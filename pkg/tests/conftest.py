"""Shared fixtures: deterministic providers, synthetic corpora, and a
programmable local HTTP stub for the wire-protocol tests."""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from labrag.corpus import Corpus, Document
from labrag.embedding import EmbeddingProvider, HashEmbeddingProvider


@pytest.fixture
def hash_provider() -> HashEmbeddingProvider:
    return HashEmbeddingProvider(dimension=64, seed=0)


class FixedProvider(EmbeddingProvider):
    """Maps exact texts to preset vectors; unknown texts are an error."""

    def __init__(self, mapping: dict[str, list[float]], dimension: int, name: str = "fixed"):
        self.mapping = {k: np.asarray(v, dtype=np.float32) for k, v in mapping.items()}
        self.dimension = dimension
        self.name = name

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        return [self.mapping[t] for t in texts]


@pytest.fixture
def fixed_provider_factory():
    return FixedProvider


def make_document(doc_id: str, text: str, title: str = "", category: str = "") -> Document:
    return Document(id=doc_id, text=text, title=title or doc_id, category=category)


_VERBS = ["fixar", "lavar", "desidratar", "incluir", "cortar", "corar", "montar", "calibrar"]
_NOUNS = ["formol", "parafina", "hematoxilina", "eosina", "micrótomo", "lâmina",
          "etanol", "xilol", "cassete", "estufa"]
_CATEGORIES = ["histologia", "citologia", "imunohistoquímica", "manutenção"]


def synth_corpus(num_docs: int, seed: int = 7, paragraphs: int = 3,
                 sentences_per_paragraph: int = 4) -> tuple[Corpus, list[dict]]:
    """Deterministic protocol-like corpus plus QA records.

    Each paragraph carries one distinctive keyword sentence its QA pair
    asks about, so the extractive stub can find grounded answers.
    """
    rng = random.Random(seed)
    documents = []
    qa_records = []
    for d in range(num_docs):
        doc_id = f"prot{d:03d}"
        paragraphs_text = []
        for p in range(paragraphs):
            marker = f"reagente{d}x{p}"
            lines = [
                f"O {marker} deve ser aplicado durante {rng.randint(2, 45)} minutos a "
                f"{rng.randint(18, 60)} graus."
            ]
            for _ in range(sentences_per_paragraph - 1):
                lines.append(
                    f"{rng.choice(_VERBS).capitalize()} o material com "
                    f"{rng.choice(_NOUNS)} antes de {rng.choice(_VERBS)} a "
                    f"{rng.choice(_NOUNS)}."
                )
            rng.shuffle(lines)
            paragraph = " ".join(lines)
            paragraphs_text.append(paragraph)
            qa_records.append({
                "question": f"Durante quanto tempo deve ser aplicado o {marker}?",
                "ground_truth": lines[0] if marker in lines[0] else paragraph,
                "reference_context": paragraph,
                "source_doc_id": doc_id,
            })
        documents.append(Document(
            id=doc_id,
            text="\n\n".join(paragraphs_text),
            title=f"Protocolo {d:03d}",
            category=_CATEGORIES[d % len(_CATEGORIES)],
            keywords=(rng.choice(_NOUNS), rng.choice(_VERBS)),
        ))
    return Corpus(documents=documents), qa_records


def write_corpus_files(tmp_path: Path, num_docs: int = 10, seed: int = 7,
                       qa_limit: int | None = None, paragraphs: int = 3) -> tuple[Path, Path]:
    """Write a synthetic corpus + QA benchmark as JSONL files."""
    corpus, qa_records = synth_corpus(num_docs, seed=seed, paragraphs=paragraphs)
    if qa_limit is not None:
        qa_records = qa_records[:qa_limit]
    corpus_path = tmp_path / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")
    qa_path = tmp_path / "qa.jsonl"
    with qa_path.open("w", encoding="utf-8") as fh:
        for rec in qa_records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return corpus_path, qa_path


# ---------------------------------------------------------------------------
# Local HTTP stub
# ---------------------------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802 (http.server API)
        length = int(self.headers.get("content-length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            body = {}
        status, payload = self.server.behavior(self.path, body)  # type: ignore[attr-defined]
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # silence test output
        pass


@pytest.fixture
def http_stub():
    """Start a local HTTP server; ``behavior(path, body) -> (status, payload)``."""
    servers: list[ThreadingHTTPServer] = []

    def start(behavior) -> str:
        server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        server.behavior = behavior  # type: ignore[attr-defined]
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_port}"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
