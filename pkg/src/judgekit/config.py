"""Engine configuration: file loading, defaults, backend construction.

Config is a single UTF-8 JSON file. Backend specs are small objects with a
"kind" plus kind-specific settings; environment variables JUDGEKIT_EMBED_URL,
JUDGEKIT_RERANK_URL, and JUDGEKIT_GENERATE_URL override the corresponding
backends to HTTP regardless of the file contents.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .backends import (
    CharOverlapReranker,
    GenerationParams,
    HashEmbedder,
    HttpEmbeddingBackend,
    HttpGenerationBackend,
    HttpRerankBackend,
)
from .conclusion import CopyPrecedentModel
from .writer import DocumentTemplate, TemplateFillModel, default_template

ENV_EMBED_URL = "JUDGEKIT_EMBED_URL"
ENV_RERANK_URL = "JUDGEKIT_RERANK_URL"
ENV_GENERATE_URL = "JUDGEKIT_GENERATE_URL"


@dataclass(frozen=True)
class Config:
    laws_path: str = ""
    cases_path: str = ""
    workdir: str = "."
    k1: int = 100
    k2: int = 10
    seed: int = 42
    generation: GenerationParams = field(default_factory=GenerationParams)
    embedding: dict[str, Any] = field(default_factory=lambda: {"kind": "hash"})
    reranker: dict[str, Any] = field(default_factory=lambda: {"kind": "overlap"})
    ice_backend: dict[str, Any] = field(
        default_factory=lambda: {"kind": "copy_precedent"}
    )
    jus_backend: dict[str, Any] = field(
        default_factory=lambda: {"kind": "template_fill"}
    )
    template_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8321

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "Config":
        raw = dict(raw)
        gen = raw.pop("generation", {})
        server = raw.pop("server", {})
        if "host" in server:
            raw["host"] = server["host"]
        if "port" in server:
            raw["port"] = server["port"]
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw, generation=GenerationParams(**gen))

    @classmethod
    def from_file(cls, path: str | Path) -> "Config":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def template(self) -> DocumentTemplate:
        if self.template_path:
            return DocumentTemplate.from_file(self.template_path)
        return default_template()


def _http_settings(spec: dict[str, Any], url: str) -> dict[str, Any]:
    return {
        "base_url": url,
        "timeout": float(spec.get("timeout", 30.0)),
        "retries": int(spec.get("retries", 2)),
    }


def build_embedding_backend(spec: dict[str, Any]):
    url = os.environ.get(ENV_EMBED_URL) or (
        spec.get("url") if spec.get("kind") == "http" else None
    )
    if url:
        return HttpEmbeddingBackend(**_http_settings(spec, url))
    kind = spec.get("kind", "hash")
    if kind == "hash":
        return HashEmbedder(dim=int(spec.get("dim", 256)))
    raise ValueError(f"unknown embedding backend kind: {kind!r}")


def build_rerank_backend(spec: dict[str, Any]):
    url = os.environ.get(ENV_RERANK_URL) or (
        spec.get("url") if spec.get("kind") == "http" else None
    )
    if url:
        return HttpRerankBackend(**_http_settings(spec, url))
    kind = spec.get("kind", "overlap")
    if kind == "overlap":
        return CharOverlapReranker()
    raise ValueError(f"unknown reranker kind: {kind!r}")


def build_generation_backend(
    spec: dict[str, Any], template: DocumentTemplate | None = None
):
    url = os.environ.get(ENV_GENERATE_URL) or (
        spec.get("url") if spec.get("kind") == "http" else None
    )
    if url:
        return HttpGenerationBackend(**_http_settings(spec, url))
    kind = spec.get("kind")
    if kind == "copy_precedent":
        return CopyPrecedentModel()
    if kind == "template_fill":
        return TemplateFillModel(template)
    raise ValueError(f"unknown generation backend kind: {kind!r}")
