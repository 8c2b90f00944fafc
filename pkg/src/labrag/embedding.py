"""Text embedding behind a provider contract, plus the vector math used
throughout ranking and evaluation.

Two providers ship: a deterministic hash embedder (the offline default,
used by every test) and an HTTP client for external embedding servers.
Vectors are stored as float32; score accumulation happens in float64.
"""

from __future__ import annotations

import hashlib
import threading
from abc import ABC, abstractmethod

import numpy as np
import requests

from .errors import EmbeddingFailure, ZeroVector
from .tokens import tokenize


class EmbeddingProvider(ABC):
    """Contract: ``embed`` of N texts returns exactly N vectors of the
    declared dimension, deterministically for a fixed configuration."""

    name: str
    dimension: int

    @abstractmethod
    def embed(self, texts: list[str]) -> list[np.ndarray]:
        """Return one float32 vector per input text."""


def embed_texts(provider: EmbeddingProvider, texts: list[str]) -> list[np.ndarray]:
    """Embed a batch through ``provider``, enforcing the provider contract."""
    if not texts:
        raise ValueError("texts must be a non-empty list")
    if any(not t for t in texts):
        raise ValueError("texts must not contain empty strings")
    vectors = provider.embed(list(texts))
    if len(vectors) != len(texts):
        raise EmbeddingFailure(
            f"provider {provider.name!r} returned {len(vectors)} vectors for {len(texts)} texts"
        )
    out: list[np.ndarray] = []
    for vec in vectors:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.ndim != 1 or arr.shape[0] != provider.dimension:
            raise EmbeddingFailure(
                f"provider {provider.name!r} returned a vector of shape {arr.shape}, "
                f"expected ({provider.dimension},)"
            )
        if not np.all(np.isfinite(arr)):
            raise EmbeddingFailure(f"provider {provider.name!r} returned non-finite values")
        out.append(arr)
    return out


def hash_embed(text: str, dimension: int, seed: int = 0) -> np.ndarray:
    """Deterministic signed-hash embedding of ``text``.

    Each token hashes to one index in [0, dimension) and a sign; signs are
    accumulated and the result is L2-normalized. An empty token list stays
    the zero vector.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    acc = np.zeros(dimension, dtype=np.float64)
    for token in tokenize(text):
        digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
        idx = int.from_bytes(digest[:8], "big") % dimension
        sign = 1.0 if digest[8] & 1 else -1.0
        acc[idx] += sign
    norm = float(np.linalg.norm(acc))
    if norm > 0.0:
        acc /= norm
    return acc  # float64; storage casts to float32 at the embed_texts boundary


class HashEmbeddingProvider(EmbeddingProvider):
    """Offline test embedder: deterministic, corpus-independent."""

    def __init__(self, dimension: int = 384, seed: int = 0, name: str | None = None):
        self.dimension = dimension
        self.seed = seed
        self.name = name or f"hash-{dimension}-{seed}"

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        return [hash_embed(t, self.dimension, self.seed) for t in texts]


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for an embedding server speaking the engine wire protocol:
    POST {base_url}/embed {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(
        self,
        base_url: str,
        dimension: int,
        name: str,
        timeout: float = 30.0,
        max_concurrency: int = 4,
    ):
        self.base_url = base_url.rstrip("/")
        self.dimension = dimension
        self.name = name
        self.timeout = timeout
        self._gate = threading.Semaphore(max_concurrency)

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        try:
            with self._gate:
                resp = requests.post(
                    f"{self.base_url}/embed", json={"texts": texts}, timeout=self.timeout
                )
        except requests.RequestException as exc:
            raise EmbeddingFailure(f"embedding server unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise EmbeddingFailure(f"embedding server returned HTTP {resp.status_code}")
        try:
            vectors = resp.json()["vectors"]
        except (ValueError, KeyError) as exc:
            raise EmbeddingFailure(f"malformed embedding response: {exc}") from exc
        if not isinstance(vectors, list):
            raise EmbeddingFailure("malformed embedding response: 'vectors' is not a list")
        return [np.asarray(v, dtype=np.float32) for v in vectors]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors: (a.b) / (|a| |b|)."""
    a64 = np.asarray(a, dtype=np.float64)
    b64 = np.asarray(b, dtype=np.float64)
    if a64.shape != b64.shape:
        raise ValueError(f"dimension mismatch: {a64.shape} vs {b64.shape}")
    norm_a = float(np.linalg.norm(a64))
    norm_b = float(np.linalg.norm(b64))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    value = float(np.dot(a64, b64)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))
