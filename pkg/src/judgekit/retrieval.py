"""Dense retrieval, reranking, and referential-element composition.

A query fact is embedded and matched against a dense article index by raw
dot product (no cosine normalization here; backends wanting cosine must
normalize their own vectors). The top-k1 articles are rescored jointly with
the fact by a rerank backend, the single most relevant precedent case is
fetched from the case index, its elements are extracted, and retrieved
articles already cited by the precedent are dropped from the external set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .backends import EmbeddingBackend, RerankBackend
from .corpus import CaseDocument, LawArticle
from .errors import (
    DimensionMismatchError,
    EmptyCorpusError,
    NonFiniteInputError,
    ScoreCountMismatchError,
)
from .extract import CaseElements, extract_elements
from .ranking import ScoredCandidate


@dataclass(frozen=True)
class ReferentialElements:
    """Everything retrieval hands to the later stages for one query fact."""

    e_case: CaseElements
    a_ext: tuple[LawArticle, ...]
    c_doc: CaseDocument

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_ext", tuple(self.a_ext))
        ext_ids = {a.id for a in self.a_ext}
        if ext_ids & self.e_case.articles:
            raise ValueError("external articles overlap the precedent's articles")
        if self.e_case.case_id != self.c_doc.case_id:
            raise ValueError("element/case id mismatch")

    def to_dict(self) -> dict[str, Any]:
        return {
            "e_case": self.e_case.to_dict(),
            "a_ext": [a.to_dict() for a in self.a_ext],
            "c_doc": self.c_doc.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReferentialElements":
        return cls(
            e_case=CaseElements.from_dict(d["e_case"]),
            a_ext=tuple(LawArticle(**a) for a in d["a_ext"]),
            c_doc=CaseDocument(**d["c_doc"]),
        )


class DenseIndex:
    """Immutable id -> vector index searched by exhaustive dot product."""

    def __init__(self, ids: Sequence[str], matrix: np.ndarray, items: Mapping[str, Any]):
        ids = tuple(ids)
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise ValueError("matrix shape does not match id count")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate ids in index")
        if not np.isfinite(matrix).all():
            raise NonFiniteInputError("index contains non-finite values")
        matrix.setflags(write=False)
        self.ids = ids
        self.matrix = matrix
        self._items = dict(items)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def get(self, item_id: str) -> Any:
        return self._items[item_id]

    def save(self, path: str | Path) -> None:
        np.savez(path, ids=np.array(self.ids, dtype=np.str_), matrix=self.matrix)

    @classmethod
    def load(cls, path: str | Path, items: Mapping[str, Any] | Sequence[Any]) -> "DenseIndex":
        data = np.load(path, allow_pickle=False)
        ids = [str(x) for x in data["ids"]]
        if not isinstance(items, Mapping):
            items = {_item_id(item): item for item in items}
        return cls(ids, data["matrix"], {i: items[i] for i in ids})


def embed(backend: EmbeddingBackend, texts: Sequence[str]) -> np.ndarray:
    """Embed texts into one (n, dim) matrix, validating shape and finiteness."""
    if not texts:
        raise ValueError("texts must be non-empty")
    raw = backend.embed(texts)
    if len(raw) != len(texts):
        raise DimensionMismatchError(
            f"backend returned {len(raw)} vectors for {len(texts)} texts"
        )
    dims = {len(v) for v in raw}
    if len(dims) != 1 or 0 in dims:
        raise DimensionMismatchError(f"ragged or empty vector dims: {sorted(dims)}")
    matrix = np.asarray(raw, dtype=np.float64)
    if not np.isfinite(matrix).all():
        raise NonFiniteInputError("backend returned non-finite embedding values")
    return matrix


def build_index(
    articles: Sequence[Any], backend: EmbeddingBackend
) -> DenseIndex:
    """Index a corpus of LawArticle or CaseDocument items by their text."""
    if not articles:
        raise EmptyCorpusError("cannot index an empty corpus")
    ids = [_item_id(a) for a in articles]
    texts = [_item_text(a) for a in articles]
    matrix = embed(backend, texts)
    return DenseIndex(ids, matrix, dict(zip(ids, articles)))


def _item_id(item: Any) -> str:
    return item.id if isinstance(item, LawArticle) else item.case_id


def _item_text(item: Any) -> str:
    # cases are matched on their fact narrative, not the whole document
    return item.text if isinstance(item, LawArticle) else item.fact


def search_topk(index: DenseIndex, query_vec: np.ndarray, k: int) -> list[ScoredCandidate]:
    """Top-k by descending dot product, ties broken by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dim:
        raise DimensionMismatchError(
            f"query dim {q.shape[0]} != index dim {index.dim}"
        )
    if not np.isfinite(q).all():
        raise NonFiniteInputError("query vector has non-finite values")
    scores = index.matrix @ q
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.ids[i]))
    return [ScoredCandidate(index.ids[i], float(scores[i])) for i in order[:k]]


def rerank(
    backend: RerankBackend,
    fact: str,
    candidates: Sequence[LawArticle],
    k2: int,
) -> list[ScoredCandidate]:
    """Score all candidates jointly with the fact; keep the top k2."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if k2 < 1:
        raise ValueError("k2 must be >= 1")
    scores = backend.score(fact, [c.text for c in candidates])
    if len(scores) != len(candidates):
        raise ScoreCountMismatchError(
            f"backend returned {len(scores)} scores for {len(candidates)} candidates"
        )
    scored = [ScoredCandidate(c.id, float(s)) for c, s in zip(candidates, scores)]
    scored.sort(key=lambda c: (-c.score, c.id))
    return scored[:k2]


def retrieve_precedent(
    case_index: DenseIndex,
    fact: str,
    backend: EmbeddingBackend,
    exclude_case_id: str | None = None,
) -> CaseDocument:
    """Top-1 case by dot product; the query's own id is left out when known."""
    q = embed(backend, [fact])[0]
    candidates = search_topk(case_index, q, k=len(case_index))
    for c in candidates:
        if c.id != exclude_case_id:
            return case_index.get(c.id)
    raise EmptyCorpusError("no precedent candidates besides the query itself")


def compose_external_articles(
    a_ret: Sequence[LawArticle], a_case: set[str]
) -> tuple[LawArticle, ...]:
    """Retrieved articles minus those the precedent already cites, in order."""
    out: list[LawArticle] = []
    seen: set[str] = set()
    for a in a_ret:
        if a.id in a_case or a.id in seen:
            continue
        out.append(a)
        seen.add(a.id)
    return tuple(out)


def rjer_search(
    fact: str,
    law_index: DenseIndex,
    case_index: DenseIndex,
    embed_backend: EmbeddingBackend,
    rerank_backend: RerankBackend,
    k1: int = 100,
    k2: int = 10,
    exclude_case_id: str | None = None,
) -> ReferentialElements:
    """Full retrieval stage: articles, precedent, elements, external set."""
    q = embed(embed_backend, [fact])[0]
    initial = search_topk(law_index, q, k1)
    candidates = [law_index.get(c.id) for c in initial]
    top = rerank(rerank_backend, fact, candidates, k2)
    a_ret = [law_index.get(c.id) for c in top]
    c_doc = retrieve_precedent(case_index, fact, embed_backend, exclude_case_id)
    e_case = extract_elements(c_doc)
    a_ext = compose_external_articles(a_ret, set(e_case.articles))
    return ReferentialElements(e_case=e_case, a_ext=a_ext, c_doc=c_doc)
