"""Law-article and case corpora: types, ingestion, persistence, statistics.

Corpus files are UTF-8 JSON Lines, one record per line:
  laws:  {"law_name": str, "article_no": int, "sub_no": int|null, "text": str}
  cases: {"case_id": str, "heading": str, "fact": str, "reasoning": str,
          "judgment_result": str}
Loaded corpora are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import DuplicateIdError, FormatError, MismatchedIdsError

log = logging.getLogger(__name__)

# a name is only trusted when a delimiter (or 犯/的) ends it; greedy
# captures into running prose are noise, not names
_MULTI_DEFENDANT_RE = re.compile(r"被告人([^，。、；：\s犯的]{1,4})(?![^，。、；：\s犯的])")


@dataclass(frozen=True)
class LawArticle:
    """One statutory article, optionally a specific paragraph of it."""

    law_name: str
    article_no: int
    sub_no: int | None
    text: str

    def __post_init__(self) -> None:
        if not self.law_name or "#" in self.law_name:
            raise ValueError(f"bad law_name: {self.law_name!r}")
        if self.article_no < 1:
            raise ValueError(f"article_no must be positive: {self.article_no}")
        if self.sub_no is not None and self.sub_no < 1:
            raise ValueError(f"sub_no must be positive: {self.sub_no}")
        if not self.text.strip():
            raise ValueError("article text is empty")

    @property
    def id(self) -> str:
        base = f"{self.law_name}#{self.article_no}"
        return base if self.sub_no is None else f"{base}.{self.sub_no}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "law_name": self.law_name,
            "article_no": self.article_no,
            "sub_no": self.sub_no,
            "text": self.text,
        }


def parse_article_id(article_id: str) -> tuple[str, int, int | None]:
    """Split "law_name#article_no[.sub_no]" into its parts.

    parse → format is the identity on well-formed ids.
    """
    name, sep, rest = article_id.partition("#")
    if not sep or not name or not rest:
        raise ValueError(f"bad article id: {article_id!r}")
    num, dot, sub = rest.partition(".")
    try:
        article_no = int(num)
        sub_no = int(sub) if dot else None
    except ValueError:
        raise ValueError(f"bad article id: {article_id!r}") from None
    if article_no < 1 or (sub_no is not None and sub_no < 1):
        raise ValueError(f"bad article id: {article_id!r}")
    return name, article_no, sub_no


def format_article_id(law_name: str, article_no: int, sub_no: int | None = None) -> str:
    base = f"{law_name}#{article_no}"
    return base if sub_no is None else f"{base}.{sub_no}"


def article_sort_key(article_id: str) -> tuple[str, int, int]:
    """Canonical ordering: by law name, then numerically by article and sub."""
    law, no, sub = parse_article_id(article_id)
    return law, no, sub or 0


@dataclass(frozen=True)
class CaseDocument:
    """A judgment document split into its three narrative sections."""

    case_id: str
    heading: str
    fact: str
    reasoning: str
    judgment_result: str

    def __post_init__(self) -> None:
        if not self.case_id.strip():
            raise ValueError("case_id is empty")
        if not self.fact.strip():
            raise ValueError(f"case {self.case_id}: fact section is empty")

    @property
    def full_text(self) -> str:
        # sections appear contiguously and in order
        parts = [self.heading, self.fact, self.reasoning, self.judgment_result]
        return "\n".join(p for p in parts if p)

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "heading": self.heading,
            "fact": self.fact,
            "reasoning": self.reasoning,
            "judgment_result": self.judgment_result,
        }


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    n_unique_charges: int
    n_unique_articles: int
    avg_fact_length: float
    avg_articles_per_doc: float


def _read_records(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise FormatError(line_no, "record is not an object")
            yield line_no, record


def load_law_corpus(path: str | Path) -> list[LawArticle]:
    articles: list[LawArticle] = []
    seen: set[str] = set()
    for line_no, record in _read_records(path):
        try:
            article = LawArticle(
                law_name=_req_str(record, "law_name"),
                article_no=_req_int(record, "article_no"),
                sub_no=_opt_int(record, "sub_no"),
                text=_req_str(record, "text"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(line_no, str(exc)) from None
        if article.id in seen:
            raise DuplicateIdError(article.id)
        seen.add(article.id)
        articles.append(article)
    return articles


def load_case_corpus(path: str | Path) -> list[CaseDocument]:
    cases: list[CaseDocument] = []
    seen: set[str] = set()
    flagged: list[str] = []
    for line_no, record in _read_records(path):
        try:
            doc = CaseDocument(
                case_id=_req_str(record, "case_id"),
                heading=_str_field(record, "heading"),
                fact=_req_str(record, "fact"),
                reasoning=_str_field(record, "reasoning"),
                judgment_result=_str_field(record, "judgment_result"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(line_no, str(exc)) from None
        if doc.case_id in seen:
            raise DuplicateIdError(doc.case_id)
        seen.add(doc.case_id)
        if is_multi_defendant(doc):
            flagged.append(doc.case_id)
        cases.append(doc)
    if flagged:
        log.warning(
            "%d case(s) look multi-defendant; only the first defendant's "
            "outcome is modeled: %s",
            len(flagged), ", ".join(flagged[:10]),
        )
    return cases


def save_law_corpus(articles: Sequence[LawArticle], path: str | Path) -> None:
    _write_records(path, (a.to_dict() for a in articles))


def save_case_corpus(cases: Sequence[CaseDocument], path: str | Path) -> None:
    _write_records(path, (c.to_dict() for c in cases))


def _write_records(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def is_multi_defendant(doc: CaseDocument) -> bool:
    """Heuristic: more than one distinct name after 被告人 in the document."""
    names = set(_MULTI_DEFENDANT_RE.findall(doc.full_text))
    return len(names) > 1


def corpus_stats(cases: Sequence[CaseDocument], elements: Sequence) -> CorpusStats:
    """Aggregate statistics over a case corpus with its extracted elements.

    elements entries must expose case_id, charges, and articles; the two
    collections must cover the same case ids.
    """
    case_ids = {c.case_id for c in cases}
    element_ids = {e.case_id for e in elements}
    if case_ids != element_ids:
        missing = sorted(case_ids ^ element_ids)
        raise MismatchedIdsError(f"case/element id mismatch: {missing[:5]}")
    n = len(cases)
    charges: set[str] = set()
    articles: set[str] = set()
    total_articles = 0
    for e in elements:
        charges.update(e.charges)
        articles.update(e.articles)
        total_articles += len(e.articles)
    return CorpusStats(
        n_documents=n,
        n_unique_charges=len(charges),
        n_unique_articles=len(articles),
        avg_fact_length=(sum(len(c.fact) for c in cases) / n) if n else 0.0,
        avg_articles_per_doc=(total_articles / len(elements)) if elements else 0.0,
    )


def _req_str(record: dict, key: str) -> str:
    value = record.get(key)
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"field {key!r} missing or empty")
    return value


def _str_field(record: dict, key: str) -> str:
    value = record.get(key, "")
    if value is None:
        return ""
    if not isinstance(value, str):
        raise ValueError(f"field {key!r} must be a string")
    return value


def _req_int(record: dict, key: str) -> int:
    value = record.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"field {key!r} must be an integer")
    return value


def _opt_int(record: dict, key: str) -> int | None:
    value = record.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"field {key!r} must be an integer or null")
    return value
