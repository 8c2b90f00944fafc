"""Config-driven experiment runner: chunk, index, retrieve, generate, and
score a QA benchmark, producing a persistable evaluation report.

A grid file (see ``data/grid.json``) describes a whole campaign; each row
is one experiment. With the deterministic stack (hash embedder, extractive
stub, containment judge) a run is fully reproducible byte for byte.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .chunking import ChunkingConfig, chunk_corpus
from .config import (
    GeneratorSpec,
    JudgeSpec,
    ProviderSpec,
    build_generator,
    build_judge,
    build_provider,
    chunking_config_from_dict,
    generator_spec_from_dict,
    judge_spec_from_dict,
    provider_spec_from_dict,
    retrieval_config_from_dict,
)
from .corpus import Corpus, QAPair
from .errors import EmptyBenchmark, EngineError
from .evaluation import (
    DEFAULT_KS,
    DEFAULT_RELEVANCE_QUESTIONS,
    MetricRow,
    aggregate_rows,
    answer_relevance,
    context_recall,
    faithfulness,
    topk_metrics,
    topk_metrics_span,
)
from .generation import DEFAULT_TEMPLATE_EN, assemble_prompt, generate_answer
from .index import build_bm25_index, build_vector_index
from .retrieval import RetrievalConfig, retrieve

logger = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """One experiment: a chunking strategy, a retrieval strategy, and the
    model stack to run them with."""

    experiment_id: str
    description: str = ""
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    provider: ProviderSpec = field(default_factory=ProviderSpec)
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    judge: JudgeSpec = field(default_factory=JudgeSpec)
    ks: tuple[int, ...] = DEFAULT_KS
    relevance_questions: int = DEFAULT_RELEVANCE_QUESTIONS
    topk_mode: str = "token"  # token | span
    template: str = DEFAULT_TEMPLATE_EN

    def snapshot(self) -> dict:
        """Stable dict form of the configuration, embedded in reports."""
        return {
            "experiment_id": self.experiment_id,
            "description": self.description,
            "chunking": {
                "strategy": self.chunking.strategy,
                "target_tokens": self.chunking.target_tokens,
                "overlap_tokens": self.chunking.overlap_tokens,
                "min_chunk_tokens": self.chunking.min_chunk_tokens,
                "breakpoint_percentile": self.chunking.breakpoint_percentile,
            },
            "retrieval": {
                "strategy": self.retrieval.strategy,
                "k": self.retrieval.k,
                "rerank_threshold": self.retrieval.rerank_threshold,
                "dense_weight": self.retrieval.dense_weight,
                "sparse_weight": self.retrieval.sparse_weight,
                "fusion_constant": self.retrieval.fusion_constant,
                "candidate_pool": self.retrieval.pool(),
            },
            "provider": self.provider.resolved_name(),
            "generator": self.generator.kind,
            "judge": self.judge.kind,
            "ks": list(self.ks),
            "relevance_questions": self.relevance_questions,
            "topk_mode": self.topk_mode,
        }


@dataclass
class EvaluationReport:
    """Per-question rows plus aggregates for one experiment."""

    experiment_id: str
    config: dict
    rows: list[MetricRow]
    aggregates: dict
    runtime_ms: float
    num_chunks: int

    def to_json(self, include_runtime: bool = False) -> str:
        """Canonical report JSON; wall-clock time is opt-in so that
        deterministic runs serialize to identical bytes."""
        doc = {
            "experiment_id": self.experiment_id,
            "config": self.config,
            "num_chunks": self.num_chunks,
            "rows": [row.to_record() for row in self.rows],
            "aggregates": self.aggregates,
            "runtime_ms": round(self.runtime_ms, 3) if include_runtime else None,
        }
        return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def _reference_span(corpus: Corpus, pair: QAPair) -> tuple[str, int, int] | None:
    doc = corpus.get(pair.source_doc_id)
    if doc is None:
        return None
    at = doc.text.find(pair.reference_context)
    if at < 0:
        return None
    return doc.id, at, at + len(pair.reference_context)


def run_experiment(
    corpus: Corpus,
    qa: list[QAPair],
    config: ExperimentConfig,
    prebuilt: tuple | None = None,
) -> EvaluationReport:
    """Run one full experiment over the benchmark.

    Per-question failures are recorded on the row (metric absent plus an
    error note) without aborting the run. ``prebuilt`` optionally supplies
    (chunks, vindex, bindex) so grid runs can share indices.
    """
    if not qa:
        raise EmptyBenchmark("benchmark contains zero QA pairs")
    started = time.perf_counter()

    provider = build_provider(config.provider)
    generator = build_generator(config.generator)
    judge = build_judge(config.judge)

    if prebuilt is not None:
        chunks, vindex, bindex = prebuilt
    else:
        chunks, vindex, bindex = build_indices(corpus, config.chunking, config.provider)

    titles = {doc.id: doc.title for doc in corpus.documents}
    effective_k = max(config.retrieval.k, max(config.ks))
    query_cfg = RetrievalConfig(
        strategy=config.retrieval.strategy,
        k=effective_k,
        rerank_threshold=config.retrieval.rerank_threshold,
        dense_weight=config.retrieval.dense_weight,
        sparse_weight=config.retrieval.sparse_weight,
        fusion_constant=config.retrieval.fusion_constant,
        candidate_pool=config.retrieval.candidate_pool,
    )

    rows: list[MetricRow] = []
    for qid, pair in enumerate(qa):
        row = MetricRow(question_id=qid)
        try:
            result = retrieve(pair.question, vindex, bindex, provider, query_cfg)
        except EngineError as exc:
            row.errors["retrieve"] = str(exc)
            rows.append(row)
            continue

        ranked = [rc.chunk for rc in result.hits]
        gen_chunks = ranked[: config.retrieval.k]

        if config.topk_mode == "span":
            span = _reference_span(corpus, pair)
            if span is not None:
                row.precision_at, row.recall_at, row.f1_at = topk_metrics_span(
                    ranked, span[0], span[1], span[2], config.ks
                )
            else:
                row.errors["topk"] = "reference context not found in source document"
        else:
            row.precision_at, row.recall_at, row.f1_at = topk_metrics(
                ranked, pair.reference_context, config.ks
            )

        answer = None
        try:
            prompt = assemble_prompt(pair.question, gen_chunks, config.template, titles)
            answer = generate_answer(generator, prompt)
        except EngineError as exc:
            row.errors["generate"] = str(exc)

        contexts = [c.text for c in gen_chunks]
        if answer is not None:
            try:
                row.faithfulness = faithfulness(answer, contexts, judge)
            except EngineError as exc:
                row.errors["faithfulness"] = str(exc)
            try:
                row.answer_relevance = answer_relevance(
                    pair.question, answer, judge, provider, config.relevance_questions
                )
            except EngineError as exc:
                row.errors["answer_relevance"] = str(exc)
        if contexts:
            try:
                row.context_recall = context_recall(contexts, pair.reference_context, judge)
            except EngineError as exc:
                row.errors["context_recall"] = str(exc)
        else:
            row.errors["context_recall"] = "no chunks retrieved"
        rows.append(row)

    runtime_ms = (time.perf_counter() - started) * 1e3
    report = EvaluationReport(
        experiment_id=config.experiment_id,
        config=config.snapshot(),
        rows=rows,
        aggregates=aggregate_rows(rows, config.ks),
        runtime_ms=runtime_ms,
        num_chunks=len(chunks),
    )
    logger.info(
        "experiment %s: %d questions, %d chunks, %.0f ms",
        config.experiment_id, len(rows), len(chunks), runtime_ms,
    )
    return report


def build_indices(corpus: Corpus, chunking: ChunkingConfig, provider_spec: ProviderSpec):
    """Chunk the corpus and build both indices (shared by CLI and grid runs)."""
    provider = build_provider(provider_spec)
    chunks = chunk_corpus(list(corpus.documents), chunking, provider)
    vindex = build_vector_index(chunks, provider)
    bindex = build_bm25_index(chunks)
    return chunks, vindex, bindex


# ---------------------------------------------------------------------------
# Grid files
# ---------------------------------------------------------------------------

def default_grid_path() -> Path:
    """The packaged ten-experiment grid."""
    return Path(str(resources.files("labrag").joinpath("data/grid.json")))


def load_grid(path: str | Path | None = None) -> list[ExperimentConfig]:
    """Parse a grid file into experiment configs.

    The file carries a list of experiments plus named provider/generator/
    judge specs that rows reference by name (or inline as objects).
    """
    path = Path(path) if path is not None else default_grid_path()
    data = json.loads(path.read_text(encoding="utf-8"))
    providers = {name: provider_spec_from_dict(d) for name, d in data.get("providers", {}).items()}
    defaults = data.get("defaults", {})
    default_generator = generator_spec_from_dict(defaults.get("generator", {}))
    default_judge = judge_spec_from_dict(defaults.get("judge", {}))
    default_ks = tuple(defaults.get("ks", list(DEFAULT_KS)))

    configs: list[ExperimentConfig] = []
    for entry in data["experiments"]:
        provider_ref = entry.get("provider", "general")
        if isinstance(provider_ref, str):
            if provider_ref not in providers:
                raise ValueError(f"grid references unknown provider {provider_ref!r}")
            provider = providers[provider_ref]
        else:
            provider = provider_spec_from_dict(provider_ref)
        retrieval_data = entry.get("retrieval", {})
        if isinstance(retrieval_data, str):
            retrieval_data = {"strategy": retrieval_data}
        configs.append(
            ExperimentConfig(
                experiment_id=entry["id"],
                description=entry.get("description", ""),
                chunking=chunking_config_from_dict(entry.get("chunking", {})),
                retrieval=retrieval_config_from_dict(retrieval_data),
                provider=provider,
                generator=generator_spec_from_dict(entry["generator"])
                if "generator" in entry
                else default_generator,
                judge=judge_spec_from_dict(entry["judge"]) if "judge" in entry else default_judge,
                ks=tuple(entry.get("ks", default_ks)),
                topk_mode=entry.get("topk_mode", defaults.get("topk_mode", "token")),
            )
        )
    return configs


def run_grid(
    corpus: Corpus,
    qa: list[QAPair],
    configs: list[ExperimentConfig],
) -> list[EvaluationReport]:
    """Run every experiment, sharing indices between rows that use the
    same chunking and provider."""
    cache: dict[tuple, tuple] = {}
    reports = []
    for config in configs:
        key = (config.chunking.label(), config.provider.resolved_name())
        if key not in cache:
            cache[key] = build_indices(corpus, config.chunking, config.provider)
        reports.append(run_experiment(corpus, qa, config, prebuilt=cache[key]))
    return reports
