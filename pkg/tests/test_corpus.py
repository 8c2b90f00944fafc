"""Corpus and QA loader tests: validation, errors, and round trips."""

import json

import pytest

from labrag.corpus import Corpus, Document, load_corpus, load_qa, save_corpus
from labrag.errors import DuplicateId, MalformedLine, MissingField, UnknownDocument

from conftest import write_corpus_files


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_load_single_document(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps({"id": "p1", "text": "Fixar em formol."})])
    corpus = load_corpus(path)
    assert len(corpus) == 1
    doc = corpus.documents[0]
    assert doc.id == "p1"
    assert doc.keywords == ()
    assert doc.title == ""


def test_duplicate_id_rejected(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [
        json.dumps({"id": "p1", "text": "a"}),
        json.dumps({"id": "p1", "text": "b"}),
    ])
    with pytest.raises(DuplicateId, match="p1"):
        load_corpus(path)


def test_missing_id_and_empty_text(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps({"text": "a"})])
    with pytest.raises(MissingField):
        load_corpus(path)
    write_lines(path, [json.dumps({"id": "p1", "text": ""})])
    with pytest.raises(MissingField):
        load_corpus(path)


def test_malformed_json_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "p1", "text": "a"}\nnot json\n', encoding="utf-8")
    with pytest.raises(MalformedLine, match=":2:"):
        load_corpus(path)


def test_invalid_utf8_is_malformed(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_bytes(b'{"id": "p1", "text": "fixa\xe7\xe3o"}\n')  # latin-1 bytes
    with pytest.raises(MalformedLine, match="UTF-8"):
        load_corpus(path)


def test_keywords_must_be_string_list(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps({"id": "p1", "text": "a", "keywords": "formol"})])
    with pytest.raises(MalformedLine):
        load_corpus(path)


def test_extra_fields_preserved_and_round_trip(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [
        json.dumps({"id": "p1", "text": "Fixação em formol.", "category": "histologia",
                    "title": "Fixação", "keywords": ["formol"], "revision": 3}),
        json.dumps({"id": "p2", "text": "Lavar as lâminas."}),
    ])
    corpus = load_corpus(path)
    assert dict(corpus.documents[0].extra) == {"revision": 3}
    out = tmp_path / "out.jsonl"
    save_corpus(corpus, out)
    assert load_corpus(out) == corpus


def test_load_is_deterministic(tmp_path):
    corpus_path, _ = write_corpus_files(tmp_path, num_docs=5)
    assert load_corpus(corpus_path) == load_corpus(corpus_path)


def test_order_preserved(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps({"id": f"p{i}", "text": "x"}) for i in range(20)])
    corpus = load_corpus(path)
    assert [d.id for d in corpus.documents] == [f"p{i}" for i in range(20)]


def test_dataset_scale_counts(tmp_path):
    # 99-document corpus with a 323-pair benchmark, the shipped dataset's shape
    corpus_path, qa_path = write_corpus_files(tmp_path, num_docs=99, qa_limit=323, paragraphs=4)
    corpus = load_corpus(corpus_path)
    assert len(corpus) == 99
    pairs = load_qa(qa_path, corpus)
    assert len(pairs) == 323


def test_load_qa_single_pair(tmp_path):
    corpus = Corpus(documents=[Document(id="p1", text="Fixar em formol.")])
    qa_path = tmp_path / "qa.jsonl"
    write_lines(qa_path, [json.dumps({
        "question": "Como fixar?", "ground_truth": "Em formol.",
        "reference_context": "Fixar em formol.", "source_doc_id": "p1",
    })])
    pairs = load_qa(qa_path, corpus)
    assert len(pairs) == 1
    assert pairs[0].source_doc_id == "p1"


def test_load_qa_unknown_document(tmp_path):
    corpus = Corpus(documents=[Document(id="p1", text="a")])
    qa_path = tmp_path / "qa.jsonl"
    write_lines(qa_path, [json.dumps({
        "question": "q", "ground_truth": "g",
        "reference_context": "r", "source_doc_id": "zzz",
    })])
    with pytest.raises(UnknownDocument, match="zzz"):
        load_qa(qa_path, corpus)


def test_load_qa_missing_field(tmp_path):
    corpus = Corpus(documents=[Document(id="p1", text="a")])
    qa_path = tmp_path / "qa.jsonl"
    write_lines(qa_path, [json.dumps({"question": "q", "source_doc_id": "p1"})])
    with pytest.raises(MissingField):
        load_qa(qa_path, corpus)
