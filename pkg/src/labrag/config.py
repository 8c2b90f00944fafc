"""Engine configuration: provider/generator/judge specs and their factories,
plus the engine config file (TOML or JSON) with ENGINE_* env overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .chunking import ChunkingConfig
from .embedding import EmbeddingProvider, HashEmbeddingProvider, HttpEmbeddingProvider
from .evaluation import ContainmentJudge, Judge, LlmJudge, DEFAULT_TAU
from .generation import ExtractiveStubGenerator, Generator, HttpGenerator
from .retrieval import RetrievalConfig

ENV_PREFIX = "ENGINE_"


@dataclass
class ProviderSpec:
    """Which embedding provider to construct."""

    kind: str = "hash"  # hash | http
    dimension: int = 384
    seed: int = 0
    base_url: str = ""
    name: str = ""
    max_concurrency: int = 4

    def resolved_name(self) -> str:
        if self.name:
            return self.name
        if self.kind == "hash":
            return f"hash-{self.dimension}-{self.seed}"
        return "http-embedder"


@dataclass
class GeneratorSpec:
    """Which answer generator to construct."""

    kind: str = "stub"  # stub | http
    base_url: str = ""
    name: str = ""
    max_concurrency: int = 2


@dataclass
class JudgeSpec:
    """Which metric judge to construct."""

    kind: str = "containment"  # containment | llm
    tau: float = DEFAULT_TAU
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)


def build_provider(spec: ProviderSpec) -> EmbeddingProvider:
    if spec.kind == "hash":
        return HashEmbeddingProvider(
            dimension=spec.dimension, seed=spec.seed, name=spec.name or None
        )
    if spec.kind == "http":
        if not spec.base_url:
            raise ValueError("http provider requires base_url")
        return HttpEmbeddingProvider(
            base_url=spec.base_url,
            dimension=spec.dimension,
            name=spec.resolved_name(),
            max_concurrency=spec.max_concurrency,
        )
    raise ValueError(f"unknown provider kind: {spec.kind!r}")


def build_generator(spec: GeneratorSpec) -> Generator:
    if spec.kind == "stub":
        return ExtractiveStubGenerator()
    if spec.kind == "http":
        if not spec.base_url:
            raise ValueError("http generator requires base_url")
        return HttpGenerator(
            base_url=spec.base_url,
            name=spec.name or "http-generator",
            max_concurrency=spec.max_concurrency,
        )
    raise ValueError(f"unknown generator kind: {spec.kind!r}")


def build_judge(spec: JudgeSpec) -> Judge:
    if spec.kind == "containment":
        return ContainmentJudge(tau=spec.tau)
    if spec.kind == "llm":
        return LlmJudge(build_generator(spec.generator))
    raise ValueError(f"unknown judge kind: {spec.kind!r}")


def provider_spec_from_dict(data: dict) -> ProviderSpec:
    return ProviderSpec(
        kind=data.get("kind", "hash"),
        dimension=int(data.get("dimension", 384)),
        seed=int(data.get("seed", 0)),
        base_url=data.get("base_url", ""),
        name=data.get("name", ""),
        max_concurrency=int(data.get("max_concurrency", 4)),
    )


def generator_spec_from_dict(data: dict) -> GeneratorSpec:
    return GeneratorSpec(
        kind=data.get("kind", "stub"),
        base_url=data.get("base_url", ""),
        name=data.get("name", ""),
        max_concurrency=int(data.get("max_concurrency", 2)),
    )


def judge_spec_from_dict(data: dict) -> JudgeSpec:
    return JudgeSpec(
        kind=data.get("kind", "containment"),
        tau=float(data.get("tau", DEFAULT_TAU)),
        generator=generator_spec_from_dict(data.get("generator", {})),
    )


def chunking_config_from_dict(data: dict) -> ChunkingConfig:
    return ChunkingConfig(
        strategy=data.get("strategy", "recursive"),
        target_tokens=int(data.get("target_tokens", 512)),
        overlap_tokens=int(data.get("overlap_tokens", 128)),
        min_chunk_tokens=int(data.get("min_chunk_tokens", 128)),
        breakpoint_percentile=float(data.get("breakpoint_percentile", 95.0)),
    )


def retrieval_config_from_dict(data: dict) -> RetrievalConfig:
    pool = data.get("candidate_pool")
    return RetrievalConfig(
        strategy=data.get("strategy", "naive"),
        k=int(data.get("k", 3)),
        rerank_threshold=float(data.get("rerank_threshold", 0.40)),
        dense_weight=float(data.get("dense_weight", 0.3)),
        sparse_weight=float(data.get("sparse_weight", 0.7)),
        fusion_constant=float(data.get("fusion_constant", 60.0)),
        candidate_pool=int(pool) if pool is not None else None,
    )


@dataclass
class EngineConfig:
    """Everything the serving engine needs."""

    corpus_path: str = ""
    index_dir: str = ""
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    provider: ProviderSpec = field(default_factory=ProviderSpec)
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    host: str = "127.0.0.1"
    port: int = 8080
    static_dir: str = ""
    generate_default: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        return cls(
            corpus_path=data.get("corpus", ""),
            index_dir=data.get("index", ""),
            chunking=chunking_config_from_dict(data.get("chunking", {})),
            retrieval=retrieval_config_from_dict(data.get("retrieval", {})),
            provider=provider_spec_from_dict(data.get("provider", {})),
            generator=generator_spec_from_dict(data.get("generator", {})),
            host=data.get("host", "127.0.0.1"),
            port=int(data.get("port", 8080)),
            static_dir=data.get("static_dir", ""),
            generate_default=bool(data.get("generate_default", False)),
        )

    @classmethod
    def from_file(cls, path: str | Path, env: dict[str, str] | None = None) -> "EngineConfig":
        path = Path(path)
        if path.suffix == ".toml":
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
        config = cls.from_dict(data)
        config.apply_env(env if env is not None else dict(os.environ))
        return config

    def apply_env(self, env: dict[str, str]) -> None:
        """Apply ENGINE_* overrides for the commonly swapped settings."""

        def get(key: str) -> str | None:
            return env.get(ENV_PREFIX + key)

        if get("CORPUS"):
            self.corpus_path = get("CORPUS")
        if get("INDEX"):
            self.index_dir = get("INDEX")
        if get("HOST"):
            self.host = get("HOST")
        if get("PORT"):
            self.port = int(get("PORT"))
        if get("STRATEGY"):
            self.retrieval.strategy = get("STRATEGY")
        if get("K"):
            self.retrieval.k = int(get("K"))
        if get("PROVIDER_KIND"):
            self.provider.kind = get("PROVIDER_KIND")
        if get("PROVIDER_URL"):
            self.provider.base_url = get("PROVIDER_URL")
        if get("PROVIDER_NAME"):
            self.provider.name = get("PROVIDER_NAME")
        if get("PROVIDER_DIMENSION"):
            self.provider.dimension = int(get("PROVIDER_DIMENSION"))
        if get("GENERATOR_KIND"):
            self.generator.kind = get("GENERATOR_KIND")
        if get("GENERATOR_URL"):
            self.generator.base_url = get("GENERATOR_URL")
