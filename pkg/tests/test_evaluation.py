"""Metric formula tests: judged metrics under the containment judge and an
LLM judge over a scripted generator, plus the deterministic top-k family."""

import random

import pytest

from labrag.embedding import HashEmbeddingProvider, cosine_similarity, hash_embed
from labrag.errors import JudgeFailure
from labrag.evaluation import (
    ContainmentJudge,
    LlmJudge,
    MetricRow,
    aggregate_rows,
    answer_relevance,
    context_recall,
    faithfulness,
    harmonic_mean,
    topk_metrics,
    topk_metrics_span,
)

from test_index import make_chunks

CONTEXTS = [
    "O formol fixa o tecido rapidamente durante dez minutos.",
    "A navalha corta a parafina fina com cuidado.",
]


@pytest.fixture
def judge():
    return ContainmentJudge(tau=0.8)


@pytest.fixture
def provider():
    return HashEmbeddingProvider(dimension=64, seed=0)


# ---------------------------------------------------------------------------
# Faithfulness
# ---------------------------------------------------------------------------

def test_faithfulness_half_supported(judge):
    answer = ("O formol fixa o tecido. A navalha corta a parafina. "
              "O robô dança samba agora. A lua brilha verde hoje.")
    assert len(judge.decompose(answer)) == 4
    assert faithfulness(answer, CONTEXTS, judge) == 0.5


def test_faithfulness_all_supported(judge):
    answer = "O formol fixa o tecido. A navalha corta a parafina."
    assert faithfulness(answer, CONTEXTS, judge) == 1.0


def test_faithfulness_verbatim_context_sentence(judge):
    answer = "O formol fixa o tecido rapidamente durante dez minutos."
    assert faithfulness(answer, CONTEXTS, judge) == 1.0


def test_faithfulness_empty_context_is_zero(judge):
    assert faithfulness("O formol fixa o tecido.", [], judge) == 0.0


def test_faithfulness_requires_answer(judge):
    with pytest.raises(ValueError):
        faithfulness("", CONTEXTS, judge)


# ---------------------------------------------------------------------------
# Answer relevance
# ---------------------------------------------------------------------------

def test_answer_relevance_identity(judge, provider):
    question = "Como fixar o tecido com formol?"
    # the judge regenerates the answer's sentences; make them the question
    assert answer_relevance(question, question, judge, provider, n=3) == pytest.approx(1.0, abs=1e-9)


def test_answer_relevance_single_question_hand_value(judge, provider):
    question = "Quanto tempo demora a fixação?"
    answer = "A fixação demora dez minutos."
    # the judge regenerates the answer's (verbatim) sentence as the question
    expected = cosine_similarity(hash_embed(question, 64, 0), hash_embed(answer, 64, 0))
    got = answer_relevance(question, answer, judge, provider, n=1)
    assert got == pytest.approx(expected, abs=1e-6)
    assert -1.0 <= got <= 1.0


def test_answer_relevance_mean_of_n(judge, provider):
    question = "Qual o corante usado?"
    answer = "Usa-se hematoxilina. Depois usa-se eosina."
    s1, s2 = "Usa-se hematoxilina.", "Depois usa-se eosina."
    q = hash_embed(question, 64, 0)
    expected = (
        cosine_similarity(q, hash_embed(s1, 64, 0))
        + cosine_similarity(q, hash_embed(s2, 64, 0))
        + cosine_similarity(q, hash_embed(s1, 64, 0))
    ) / 3.0
    got = answer_relevance(question, answer, judge, provider, n=3)
    assert got == pytest.approx(expected, abs=1e-6)


# ---------------------------------------------------------------------------
# Context recall
# ---------------------------------------------------------------------------

def test_context_recall_two_thirds(judge):
    reference = "O formol fixa o tecido"
    retrieved = [
        "Sabemos que o formol fixa o tecido depressa.",
        "O formol fixa bem o tecido em blocos.",
        "A estufa aquece a parafina.",
    ]
    assert context_recall(retrieved, reference, judge) == pytest.approx(2 / 3, abs=1e-12)


def test_context_recall_all_irrelevant(judge):
    assert context_recall(["nada a ver", "outro tema"], "formol fixa tecido", judge) == 0.0


def test_context_recall_containing_full_reference(judge):
    reference = "fixar em formol a 10%"
    chunk = "Antes de cortar, fixar em formol a 10% durante a noite."
    assert context_recall([chunk], reference, judge) == 1.0


def test_context_recall_requires_chunks(judge):
    with pytest.raises(ValueError):
        context_recall([], "ref", judge)


# ---------------------------------------------------------------------------
# Top-k metrics
# ---------------------------------------------------------------------------

def test_topk_identical_chunk():
    chunks = make_chunks(["fixar em formol a dez"])
    p, r, f1 = topk_metrics(chunks, "fixar em formol a dez", ks=[1])
    assert p[1] == r[1] == f1[1] == 1.0


def test_topk_disjoint_chunk():
    chunks = make_chunks(["navalha corta parafina"])
    p, r, f1 = topk_metrics(chunks, "formol fixa tecido", ks=[1])
    assert p[1] == r[1] == f1[1] == 0.0


def test_topk_empty_retrieval():
    p, r, f1 = topk_metrics([], "formol fixa tecido", ks=[1, 2])
    assert p == {1: 0.0, 2: 0.0}
    assert r == {1: 0.0, 2: 0.0}
    assert f1 == {1: 0.0, 2: 0.0}


def test_topk_k_beyond_list_reuses_all():
    chunks = make_chunks(["formol fixa", "navalha corta"])
    p, r, f1 = topk_metrics(chunks, "formol fixa navalha corta", ks=[2, 8])
    assert p[8] == p[2] and r[8] == r[2]


def test_f1_published_aggregate_pair():
    # aggregate P=0.45, R=0.59 gives a harmonic mean just above the
    # macro-averaged 0.50 that per-question averaging reports
    assert harmonic_mean(0.45, 0.59) == pytest.approx(2 * 0.45 * 0.59 / 1.04, abs=1e-12)
    assert harmonic_mean(0.45, 0.59) == pytest.approx(0.5106, abs=5e-4)


def test_f1_identity_random_pairs():
    rng = random.Random(23)
    for _ in range(200):
        p, r = rng.random(), rng.random()
        f1 = harmonic_mean(p, r)
        assert abs(f1 - (0.0 if p + r == 0 else 2 * p * r / (p + r))) <= 1e-12
        if p == 0.0 and r == 0.0:
            assert f1 == 0.0
        elif p > 0 and r > 0:
            assert min(p, r) <= f1 <= max(p, r)
    assert harmonic_mean(0.0, 0.0) == 0.0
    assert harmonic_mean(0.0, 0.7) == 0.0


def test_recall_monotone_in_k():
    rng = random.Random(31)
    vocab = [f"t{i}" for i in range(60)]
    for _ in range(40):
        chunks = make_chunks([
            " ".join(rng.choice(vocab) for _ in range(rng.randint(2, 12)))
            for _ in range(rng.randint(1, 10))
        ])
        reference = " ".join(rng.choice(vocab) for _ in range(rng.randint(2, 12)))
        _, r, _ = topk_metrics(chunks, reference, ks=[1, 2, 4, 8])
        assert r[1] <= r[2] <= r[4] <= r[8]


def test_topk_span_mode():
    text = "A" * 10 + "B" * 10 + "C" * 10
    chunks = [
        make_chunks(["x"])[0].__class__(
            chunk_id="d#0", doc_id="d", ordinal=0, text=text[0:12],
            char_start=0, char_end=12, token_count=1),
        make_chunks(["x"])[0].__class__(
            chunk_id="d#1", doc_id="d", ordinal=1, text=text[12:30],
            char_start=12, char_end=30, token_count=1),
    ]
    # reference span [10, 20): chunk 0 covers [10,12), chunk 1 covers [12,20)
    p, r, f1 = topk_metrics_span(chunks, "d", 10, 20, ks=[1, 2])
    assert p[1] == 1.0 and r[1] == pytest.approx(0.2)
    assert p[2] == 1.0 and r[2] == 1.0


# ---------------------------------------------------------------------------
# Rows and aggregation
# ---------------------------------------------------------------------------

def test_aggregate_means_over_present_rows():
    rows = [
        MetricRow(question_id=0, faithfulness=1.0, answer_relevance=0.5,
                  context_recall=0.5, precision_at={1: 1.0}, recall_at={1: 0.5}, f1_at={1: 2 / 3}),
        MetricRow(question_id=1, faithfulness=None, answer_relevance=0.7,
                  context_recall=None, precision_at={1: 0.0}, recall_at={1: 0.0}, f1_at={1: 0.0}),
    ]
    agg = aggregate_rows(rows, ks=[1])
    assert agg["faithfulness"] == 1.0  # only row 0 present
    assert agg["answer_relevance"] == pytest.approx(0.6)
    assert agg["context_recall"] == 0.5
    assert agg["precision_at"]["1"] == 0.5
    assert agg["recall_at"]["1"] == 0.25


def test_metric_row_record_shape():
    row = MetricRow(question_id=3, faithfulness=0.5, precision_at={1: 1.0},
                    recall_at={1: 1.0}, f1_at={1: 1.0})
    rec = row.to_record()
    assert rec["question_id"] == 3
    assert rec["precision_at"] == {"1": 1.0}
    assert "errors" not in rec
    row.errors["generate"] = "offline"
    assert row.to_record()["errors"] == {"generate": "offline"}


# ---------------------------------------------------------------------------
# LLM judge over a scripted generator
# ---------------------------------------------------------------------------

class ScriptedGenerator:
    name = "scripted"

    def __init__(self, script):
        self.script = script  # list of (match, response)

    def generate(self, prompt, max_tokens=512):
        for match, response in self.script:
            if match in prompt:
                return response
        raise AssertionError(f"unexpected prompt: {prompt[:60]}")


def test_llm_judge_decompose_and_verdicts():
    gen = ScriptedGenerator([
        ("Break the following answer", "1. O formol fixa.\n2. A navalha corta.\n"),
        ("Is the statement fully supported", "YES"),
    ])
    judge = LlmJudge(gen)
    statements = judge.decompose("O formol fixa. A navalha corta.")
    assert statements == ["O formol fixa.", "A navalha corta."]
    assert judge.is_supported(statements[0], CONTEXTS) is True
    assert faithfulness("qualquer resposta", CONTEXTS, judge) == 1.0


def test_llm_judge_bad_verdict_raises():
    gen = ScriptedGenerator([("Is the statement fully supported", "maybe?")])
    judge = LlmJudge(gen)
    with pytest.raises(JudgeFailure):
        judge.is_supported("x", ["y"])


def test_llm_judge_pads_questions():
    gen = ScriptedGenerator([("Write 3 different questions", "Uma pergunta?\n")])
    judge = LlmJudge(gen)
    assert judge.generate_questions("resposta", 3) == ["Uma pergunta?"] * 3


def test_llm_judge_relevance_no():
    gen = ScriptedGenerator([("Is the passage relevant", "NO")])
    judge = LlmJudge(gen)
    assert judge.is_relevant("passagem", "referência") is False
