"""Rule-based extraction of judgment elements from Chinese court text.

Pulls cited law articles, charges, the prison term, and the fine out of
judgment text, and segments generated documents into their sections. The
pattern grammar here is normative: the deterministic renderers at the bottom
emit exactly what the extractors parse, so render → extract is the identity
on valid element tuples (the round-trip property the tests enforce).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .corpus import CaseDocument, format_article_id
from .errors import (
    ExtractionIncompleteError,
    MalformedDocumentError,
    NumeralParseError,
)
from .numerals import NUMERAL_CHARS, int_to_chinese, parse_chinese_numeral

__all__ = [
    "TermKind", "FineKind", "PrisonTerm", "FineAmount", "CaseElements",
    "parse_chinese_numeral", "extract_articles", "extract_charges",
    "extract_term", "extract_fine", "extract_elements", "scan_term",
    "render_term_phrase", "render_fine_phrase", "canonical_law_name",
    "segment_text", "SECTION_HEADERS",
]


class TermKind(str, Enum):
    FIXED_TERM = "fixed_term"
    DETENTION = "detention"
    LIFE = "life"
    DEATH = "death"
    NONE = "none"


class FineKind(str, Enum):
    AMOUNT = "amount"
    NONE = "none"
    CONFISCATION = "confiscation"


@dataclass(frozen=True)
class PrisonTerm:
    kind: TermKind
    months: int = 0

    def __post_init__(self) -> None:
        if self.kind in (TermKind.FIXED_TERM, TermKind.DETENTION):
            if self.months < 1:
                raise ValueError(f"{self.kind.value} term needs months >= 1")
        elif self.months != 0:
            raise ValueError(f"{self.kind.value} term cannot carry months")

    @classmethod
    def none(cls) -> "PrisonTerm":
        return cls(TermKind.NONE)

    @classmethod
    def fixed(cls, months: int) -> "PrisonTerm":
        return cls(TermKind.FIXED_TERM, months)

    @classmethod
    def detention(cls, months: int) -> "PrisonTerm":
        return cls(TermKind.DETENTION, months)

    @classmethod
    def life(cls) -> "PrisonTerm":
        return cls(TermKind.LIFE)

    @classmethod
    def death(cls) -> "PrisonTerm":
        return cls(TermKind.DEATH)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "months": self.months}

    @classmethod
    def from_dict(cls, d: dict) -> "PrisonTerm":
        # clients send null months for kinds that carry none
        return cls(TermKind(d["kind"]), int(d.get("months") or 0))


@dataclass(frozen=True)
class FineAmount:
    kind: FineKind
    cny: int = 0

    def __post_init__(self) -> None:
        if self.kind is FineKind.AMOUNT:
            if self.cny < 1:
                raise ValueError("fine amount needs cny >= 1")
        elif self.cny != 0:
            raise ValueError(f"{self.kind.value} fine cannot carry cny")

    @classmethod
    def none(cls) -> "FineAmount":
        return cls(FineKind.NONE)

    @classmethod
    def amount(cls, cny: int) -> "FineAmount":
        return cls(FineKind.AMOUNT, cny)

    @classmethod
    def confiscation(cls) -> "FineAmount":
        return cls(FineKind.CONFISCATION)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "cny": self.cny}

    @classmethod
    def from_dict(cls, d: dict) -> "FineAmount":
        return cls(FineKind(d["kind"]), int(d.get("cny") or 0))


@dataclass(frozen=True)
class CaseElements:
    """The extracted tuple for one case: fact, charges, articles, term, fine."""

    case_id: str
    fact: str
    charges: frozenset[str]
    articles: frozenset[str]
    term: PrisonTerm
    fine: FineAmount

    def __post_init__(self) -> None:
        if not self.charges:
            raise ValueError("charges must be non-empty")
        for label in self.charges:
            if not label.endswith("罪"):
                raise ValueError(f"charge label must end with 罪: {label!r}")
        object.__setattr__(self, "charges", frozenset(self.charges))
        object.__setattr__(self, "articles", frozenset(self.articles))

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "fact": self.fact,
            "charges": sorted(self.charges),
            "articles": sorted(self.articles),
            "term": self.term.to_dict(),
            "fine": self.fine.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaseElements":
        return cls(
            case_id=d["case_id"],
            fact=d["fact"],
            charges=frozenset(d["charges"]),
            articles=frozenset(d["articles"]),
            term=PrisonTerm.from_dict(d["term"]),
            fine=FineAmount.from_dict(d["fine"]),
        )


_NUM = f"[{NUMERAL_CHARS}]+"

# 《law name》 or 第N条[第M款]; articles bind to the law named last, and only
# across connective gaps (、， 和 及 与 以及), so stray 第…条 far from any
# citation context is ignored.
_CITE_RE = re.compile(rf"《([^《》]{{1,60}})》|第({_NUM})条(?:第({_NUM})款)?")
_GAP_CHARS = set("、，, \t\n\r和及与以")

# charge label: run of non-separator chars ending in 罪; 犯 and 罪 excluded
# from the interior so 犯罪嫌疑人/犯罪行为 never match
_CHARGE_LABEL = r"[^，。；、：:\s犯罪]+罪"
_CHARGE_RE = re.compile(rf"犯((?:{_CHARGE_LABEL})(?:、(?:{_CHARGE_LABEL}))*)")

_TERM_RE = re.compile(
    rf"有期徒刑(?:({_NUM})年)?(?:({_NUM})个月)?"
    rf"|拘役({_NUM})个月"
    rf"|无期徒刑"
    rf"|死刑"
)

_FINE_RE = re.compile(rf"罚金(?:人民币)?({_NUM})元|没收个人全部财产")

# multi-count judgments state the combined sentence after this marker
_COMBINED_MARKER = "决定执行"

# docket number in a rendered heading, e.g. （case-12）刑事判决书
_CASE_NO_RE = re.compile(r"（([^（）]+)）")

_FULLWIDTH_ASCII = str.maketrans(
    {chr(0xFF01 + i): chr(0x21 + i) for i in range(94)}
)

SECTION_HEADERS = ("经审理查明", "本院认为", "判决如下")


def canonical_law_name(name: str) -> str:
    name = name.strip().translate(_FULLWIDTH_ASCII)
    if name.startswith("中华人民共和国"):
        name = name[len("中华人民共和国"):]
    return name


def canonicalize_charge(label: str) -> str:
    return label.strip().translate(_FULLWIDTH_ASCII)


def extract_articles(text: str) -> set[str]:
    """All article ids cited as 《law》第N条[第M款], enumeration-aware."""
    out: set[str] = set()
    current_law: str | None = None
    last_end = 0
    for m in _CITE_RE.finditer(text):
        if m.group(1) is not None:
            name = canonical_law_name(m.group(1))
            current_law = name if name and "#" not in name else None
            last_end = m.end()
            continue
        if current_law is None:
            continue
        gap = text[last_end:m.start()]
        if set(gap) - _GAP_CHARS:
            continue
        try:
            article_no = parse_chinese_numeral(m.group(2))
            sub_no = parse_chinese_numeral(m.group(3)) if m.group(3) else None
        except NumeralParseError:
            continue
        if article_no < 1 or (sub_no is not None and sub_no < 1):
            continue
        out.add(format_article_id(current_law, article_no, sub_no))
        last_end = m.end()
    return out


def extract_charges(text: str) -> set[str]:
    """Charge labels named as 犯X罪 (、-enumerations included)."""
    out: set[str] = set()
    for m in _CHARGE_RE.finditer(text):
        for label in m.group(1).split("、"):
            out.add(canonicalize_charge(label))
    return out


def extract_term(text: str) -> PrisonTerm:
    """First sentencing clause; the 决定执行 combined sentence wins if present."""
    k = text.find(_COMBINED_MARKER)
    if k >= 0:
        term = scan_term(text, k + len(_COMBINED_MARKER))
        if term is not None:
            return term
    return scan_term(text, 0) or PrisonTerm.none()


def scan_term(text: str, start: int = 0) -> PrisonTerm | None:
    """First sentencing clause at or after start; None when there is none."""
    pos = start
    while True:
        m = _TERM_RE.search(text, pos)
        if m is None:
            return None
        pos = m.end()
        matched = m.group(0)
        if matched.startswith("无期徒刑"):
            return PrisonTerm.life()
        if matched.startswith("死刑"):
            return PrisonTerm.death()
        try:
            if matched.startswith("拘役"):
                months = parse_chinese_numeral(m.group(3))
                if months >= 1:
                    return PrisonTerm.detention(months)
                continue
            # 有期徒刑 with neither part is statute boilerplate, skip it
            if m.group(1) is None and m.group(2) is None:
                continue
            years = parse_chinese_numeral(m.group(1)) if m.group(1) else 0
            months = parse_chinese_numeral(m.group(2)) if m.group(2) else 0
            total = 12 * years + months
            if total >= 1:
                return PrisonTerm.fixed(total)
        except NumeralParseError:
            continue


def extract_fine(text: str) -> FineAmount:
    k = text.find(_COMBINED_MARKER)
    if k >= 0:
        fine = _first_fine(text, k + len(_COMBINED_MARKER))
        if fine is not None:
            return fine
    return _first_fine(text, 0) or FineAmount.none()


def _first_fine(text: str, start: int) -> FineAmount | None:
    pos = start
    while True:
        m = _FINE_RE.search(text, pos)
        if m is None:
            return None
        pos = m.end()
        if m.group(1) is None:
            return FineAmount.confiscation()
        try:
            cny = parse_chinese_numeral(m.group(1))
        except NumeralParseError:
            continue
        if cny >= 1:
            return FineAmount.amount(cny)


def extract_elements(doc, case_id: str | None = None) -> CaseElements:
    """Compose the four extractors over a judgment document.

    Accepts a CaseDocument or any rendered document exposing the same
    sections (fact may be named fact_section). Charges, term, and fine come
    from the operative judgment result; articles from reasoning and judgment
    result together. Documents without a case_id fall back to the docket
    number in their heading, if any.
    """
    if case_id is None:
        case_id = getattr(doc, "case_id", None)
        if case_id is None:
            m = _CASE_NO_RE.search(doc.heading)
            case_id = m.group(1) if m else ""
    fact = doc.fact if hasattr(doc, "fact") else doc.fact_section
    charges = extract_charges(doc.judgment_result)
    if not charges:
        raise ExtractionIncompleteError("charges", case_id)
    articles = extract_articles(doc.reasoning) | extract_articles(doc.judgment_result)
    return CaseElements(
        case_id=case_id,
        fact=fact,
        charges=frozenset(charges),
        articles=frozenset(articles),
        term=extract_term(doc.judgment_result),
        fine=extract_fine(doc.judgment_result),
    )


def render_term_phrase(term: PrisonTerm) -> str:
    """Inverse of extract_term for a single clause."""
    if term.kind is TermKind.FIXED_TERM:
        years, months = divmod(term.months, 12)
        parts = "有期徒刑"
        if years:
            parts += f"{int_to_chinese(years)}年"
        if months:
            parts += f"{int_to_chinese(months)}个月"
        return parts
    if term.kind is TermKind.DETENTION:
        return f"拘役{int_to_chinese(term.months)}个月"
    if term.kind is TermKind.LIFE:
        return "无期徒刑"
    if term.kind is TermKind.DEATH:
        return "死刑"
    raise ValueError("no phrase for an absent term")


def render_fine_phrase(fine: FineAmount) -> str:
    """Inverse of extract_fine for a single clause."""
    if fine.kind is FineKind.AMOUNT:
        return f"罚金人民币{int_to_chinese(fine.cny)}元"
    if fine.kind is FineKind.CONFISCATION:
        return "没收个人全部财产"
    raise ValueError("no phrase for an absent fine")


def segment_text(full_text: str) -> tuple[str, str, str, str]:
    """Split generated judgment text on the fixed section headers.

    Returns (heading, fact, reasoning, judgment_result). The fact section is
    stripped of its header and leading colon; reasoning and judgment_result
    keep their headers.
    """
    i1 = full_text.find(SECTION_HEADERS[0])
    if i1 < 0:
        raise MalformedDocumentError(f"missing section header {SECTION_HEADERS[0]}")
    i2 = full_text.find(SECTION_HEADERS[1], i1 + len(SECTION_HEADERS[0]))
    if i2 < 0:
        raise MalformedDocumentError(f"missing section header {SECTION_HEADERS[1]}")
    i3 = full_text.find(SECTION_HEADERS[2], i2 + len(SECTION_HEADERS[1]))
    if i3 < 0:
        raise MalformedDocumentError(f"missing section header {SECTION_HEADERS[2]}")
    heading = full_text[:i1].strip()
    fact = full_text[i1 + len(SECTION_HEADERS[0]):i2].strip()
    fact = fact.lstrip("：:").strip()
    reasoning = full_text[i2:i3].strip()
    judgment_result = full_text[i3:].strip()
    return heading, fact, reasoning, judgment_result
