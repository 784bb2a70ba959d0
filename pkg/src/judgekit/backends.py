"""Model-backend abstractions: embedding, reranking, text generation.

Three protocols, deterministic in-process mocks good enough for tests and
offline smoke runs, and HTTP clients speaking the wire protocols:

  POST {base}/embed     {"texts": [str]}                  -> {"vectors": [[num]]}
  POST {base}/score     {"query": str, "candidates": [s]} -> {"scores": [num]}
  POST {base}/generate  {"prompt", "temperature", "top_k",
                         "max_new_tokens"}                -> {"text": str}

All HTTP clients retry transient failures and raise BackendUnavailableError
once attempts are exhausted.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Any, Protocol, Sequence, runtime_checkable

import requests

from .errors import BackendUnavailableError


@dataclass(frozen=True)
class GenerationParams:
    """Decoding settings sent with every generation request."""

    temperature: float = 0.1
    top_k: int = 1
    max_new_tokens: int = 3000

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


@runtime_checkable
class EmbeddingBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


@runtime_checkable
class RerankBackend(Protocol):
    def score(self, query: str, candidates: Sequence[str]) -> list[float]: ...


@runtime_checkable
class GenerationBackend(Protocol):
    def generate(self, prompt: str, params: GenerationParams) -> str: ...


class HashEmbedder:
    """Deterministic character n-gram feature hashing, L2-normalized.

    Identical texts map to identical unit vectors, so an exact duplicate of a
    query always scores 1.0 under the dot product; near-duplicates score high
    but strictly lower. Uses crc32, not the salted built-in hash, so vectors
    are stable across processes.
    """

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._one(t) for t in texts]

    def probe(self) -> bool:
        return True

    def _one(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for gram in self._grams(text):
            raw = gram.encode("utf-8")
            idx = zlib.crc32(raw) % self.dim
            sign = 1.0 if zlib.crc32(b"\x01" + raw) & 1 else -1.0
            vec[idx] += sign
        norm = math.sqrt(sum(v * v for v in vec))
        if norm > 0:
            vec = [v / norm for v in vec]
        return vec

    @staticmethod
    def _grams(text: str):
        for ch in text:
            yield ch
        for i in range(len(text) - 1):
            yield text[i:i + 2]


class CharOverlapReranker:
    """Scores a candidate by how many distinct query characters it shares."""

    def score(self, query: str, candidates: Sequence[str]) -> list[float]:
        q = set(query)
        return [float(len(q & set(c))) for c in candidates]

    def probe(self) -> bool:
        return True


class _HttpClient:
    def __init__(self, base_url: str, timeout: float = 30.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self._session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._session.post(
                    self.base_url + path, json=payload, timeout=self.timeout
                )
                resp.raise_for_status()
                data = resp.json()
                if not isinstance(data, dict):
                    raise ValueError("response body is not an object")
                return data
            except (requests.RequestException, ValueError) as exc:
                last = exc
        raise BackendUnavailableError(f"{self.base_url}{path}: {last}")

    def probe(self) -> bool:
        try:
            self._session.get(self.base_url, timeout=2.0)
            return True
        except requests.RequestException:
            return False


class HttpEmbeddingBackend(_HttpClient):
    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        data = self._post("/embed", {"texts": list(texts)})
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise BackendUnavailableError(
                f"{self.base_url}/embed returned a malformed vector list"
            )
        return vectors


class HttpRerankBackend(_HttpClient):
    def score(self, query: str, candidates: Sequence[str]) -> list[float]:
        data = self._post(
            "/score", {"query": query, "candidates": list(candidates)}
        )
        scores = data.get("scores")
        if not isinstance(scores, list):
            raise BackendUnavailableError(
                f"{self.base_url}/score returned a malformed score list"
            )
        return scores


class HttpGenerationBackend(_HttpClient):
    def generate(self, prompt: str, params: GenerationParams) -> str:
        data = self._post(
            "/generate",
            {
                "prompt": prompt,
                "temperature": params.temperature,
                "top_k": params.top_k,
                "max_new_tokens": params.max_new_tokens,
            },
        )
        text = data.get("text")
        if not isinstance(text, str):
            raise BackendUnavailableError(
                f"{self.base_url}/generate returned a malformed reply"
            )
        return text


class RecordingEmbedding:
    """Pass-through wrapper that logs every embed call (texts per request)."""

    def __init__(self, inner: EmbeddingBackend):
        self.inner = inner
        self.calls: list[list[str]] = []

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        self.calls.append(list(texts))
        return self.inner.embed(texts)

    def probe(self) -> bool:
        return _probe(self.inner)


class RecordingRerank:
    """Pass-through wrapper that logs (query, candidate count) per call."""

    def __init__(self, inner: RerankBackend):
        self.inner = inner
        self.calls: list[tuple[str, int]] = []

    def score(self, query: str, candidates: Sequence[str]) -> list[float]:
        self.calls.append((query, len(candidates)))
        return self.inner.score(query, candidates)

    def probe(self) -> bool:
        return _probe(self.inner)


class RecordingGeneration:
    """Pass-through wrapper that logs (prompt, params) per call."""

    def __init__(self, inner: GenerationBackend):
        self.inner = inner
        self.calls: list[tuple[str, GenerationParams]] = []

    def generate(self, prompt: str, params: GenerationParams) -> str:
        self.calls.append((prompt, params))
        return self.inner.generate(prompt, params)

    def probe(self) -> bool:
        return _probe(self.inner)


def _probe(backend: Any) -> bool:
    fn = getattr(backend, "probe", None)
    return bool(fn()) if callable(fn) else True


def probe_backend(backend: Any) -> bool:
    """Best-effort reachability check; backends without probe() count as up."""
    return _probe(backend)
