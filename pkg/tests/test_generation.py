"""Prompt assembly and generator tests, including the extractive stub oracle."""

import pytest

from labrag.errors import GenerationFailure, TemplateError
from labrag.generation import (
    DEFAULT_TEMPLATE_EN,
    DEFAULT_TEMPLATE_PT,
    ExtractiveStubGenerator,
    HttpGenerator,
    NO_CONTEXT_ANSWER,
    assemble_prompt,
    generate_answer,
)
from labrag.tokens import content_tokens, split_sentences

from test_index import make_chunks


def test_assemble_zero_hits_keeps_no_context_instruction():
    prompt = assemble_prompt("Como fixar?", [], DEFAULT_TEMPLATE_EN)
    assert "reply exactly NO_CONTEXT" in prompt
    assert "Question: Como fixar?" in prompt
    assert "Context:\n\n" in prompt  # empty context block


def test_assemble_orders_and_prefixes_sources():
    chunks = make_chunks(["Fixar em formol.", "Cortar depois."], doc_id="p1")
    titles = {"p1": "Fixação"}
    prompt = assemble_prompt("Como fixar?", chunks, DEFAULT_TEMPLATE_EN, titles)
    first = prompt.find("[p1 · Fixação]\nFixar em formol.")
    second = prompt.find("[p1 · Fixação]\nCortar depois.")
    assert 0 <= first < second


def test_assemble_missing_placeholder():
    with pytest.raises(TemplateError, match="question"):
        assemble_prompt("q", [], "Context: {context}")
    with pytest.raises(TemplateError, match="context"):
        assemble_prompt("q", [], "Question: {question}")


def test_assemble_substitutes_exactly_once():
    template = "A {context} B {question} C {context}"
    prompt = assemble_prompt("PERGUNTA", make_chunks(["corpo"]), template)
    assert prompt == "A [d · ]\ncorpo B PERGUNTA C {context}"


def test_assemble_values_cannot_be_resubstituted():
    chunks = make_chunks(["texto com {question} dentro"])
    prompt = assemble_prompt("pergunta", chunks, DEFAULT_TEMPLATE_EN)
    assert "texto com {question} dentro" in prompt


def test_assemble_is_order_sensitive():
    chunks = make_chunks(["primeiro", "segundo"])
    a = assemble_prompt("q", chunks, DEFAULT_TEMPLATE_EN)
    b = assemble_prompt("q", list(reversed(chunks)), DEFAULT_TEMPLATE_EN)
    assert a != b


def test_portuguese_template_has_placeholders():
    prompt = assemble_prompt("Como fixar?", [], DEFAULT_TEMPLATE_PT)
    assert "NO_CONTEXT" in prompt
    assert "Como fixar?" in prompt


# ---------------------------------------------------------------------------
# Extractive stub
# ---------------------------------------------------------------------------

def test_stub_picks_max_overlap_sentence_oracle():
    context_chunks = make_chunks([
        "A navalha corta parafina. O formol fixa o tecido em dez minutos. "
        "A estufa aquece a parafina."
    ])
    question = "Quanto tempo demora o formol a fixar o tecido?"
    prompt = assemble_prompt(question, context_chunks, DEFAULT_TEMPLATE_EN)
    stub = ExtractiveStubGenerator()
    answer = stub.generate(prompt)

    # oracle: exhaustive sentence-overlap scan over the context block
    q_tokens = content_tokens(question)
    best, best_overlap = None, -1
    for sentence, _, _ in split_sentences(context_chunks[0].text):
        overlap = len(q_tokens & content_tokens(sentence))
        if overlap > best_overlap:
            best, best_overlap = sentence.strip(), overlap
    assert answer == best == "O formol fixa o tecido em dez minutos."


def test_stub_tie_breaks_earliest():
    chunks = make_chunks(["O corante azul brilha. O corante azul seca."])
    prompt = assemble_prompt("corante azul", chunks, DEFAULT_TEMPLATE_EN)
    assert ExtractiveStubGenerator().generate(prompt) == "O corante azul brilha."


def test_stub_empty_context_returns_no_context():
    prompt = assemble_prompt("Como fixar?", [], DEFAULT_TEMPLATE_EN)
    assert ExtractiveStubGenerator().generate(prompt) == NO_CONTEXT_ANSWER


def test_stub_zero_overlap_returns_first_sentence():
    chunks = make_chunks(["Primeira frase aqui. Segunda frase ali."])
    prompt = assemble_prompt("pergunta sem tokens comuns?", chunks, DEFAULT_TEMPLATE_EN)
    assert ExtractiveStubGenerator().generate(prompt) == "Primeira frase aqui."


def test_stub_answer_is_verbatim_context_sentence():
    chunks = make_chunks(["O formol fixa bem. A navalha corta fino."])
    prompt = assemble_prompt("Como corta a navalha?", chunks, DEFAULT_TEMPLATE_EN)
    answer = ExtractiveStubGenerator().generate(prompt)
    assert answer in chunks[0].text


def test_generate_answer_rejects_empty_prompt():
    with pytest.raises(ValueError):
        generate_answer(ExtractiveStubGenerator(), "")


class _EmptyGenerator:
    name = "empty"

    def generate(self, prompt, max_tokens=512):
        return "   "


def test_generate_answer_empty_output_fails():
    with pytest.raises(GenerationFailure):
        generate_answer(_EmptyGenerator(), "Context:\nx\nQuestion: y")


# ---------------------------------------------------------------------------
# HTTP generator
# ---------------------------------------------------------------------------

def test_http_generator_round_trip(http_stub):
    def behavior(path, body):
        assert path == "/generate"
        assert body["max_tokens"] == 64
        return 200, {"text": f"echo: {body['prompt'][:10]}"}

    gen = HttpGenerator(http_stub(behavior))
    assert gen.generate("Como fixar o tecido?", max_tokens=64) == "echo: Como fixar"


def test_http_generator_500_fails(http_stub):
    gen = HttpGenerator(http_stub(lambda p, b: (500, {"error": "boom"})))
    with pytest.raises(GenerationFailure, match="500"):
        generate_answer(gen, "Context:\nx\nQuestion: y")


def test_http_generator_unreachable():
    gen = HttpGenerator("http://127.0.0.1:1", timeout=0.5)
    with pytest.raises(GenerationFailure, match="unreachable"):
        gen.generate("prompt")
