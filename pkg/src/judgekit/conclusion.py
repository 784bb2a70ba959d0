"""Intermediate conclusion: prompt building, parsing, and human edits.

The conclusion travels between model and engine as a canonical four-line
block, which is both what the prompt demands and the only thing the parser
accepts:

    罪名: 盗窃罪;抢劫罪
    法条: 刑法#264;刑法#52
    刑期: 有期徒刑八个月
    罚金: 人民币二千元

Charges and article ids are ;-separated and kept in order. 刑期 takes a
sentence phrase, a bare month count, or 无; 罚金 takes 人民币X元, a bare yuan
amount, 没收个人全部财产, or 无. parse_conclusion(render_conclusion(j))
reproduces j's four fields exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .backends import GenerationBackend, GenerationParams
from .corpus import LawArticle, article_sort_key, parse_article_id
from .errors import ConclusionParseError, InvalidEditError
from .extract import (
    CaseElements,
    FineAmount,
    FineKind,
    PrisonTerm,
    TermKind,
    canonicalize_charge,
    render_fine_phrase,
    render_term_phrase,
    scan_term,
)
from .numerals import NUMERAL_CHARS, parse_chinese_numeral

NO_EXTERNAL_ARTICLES_MARKER = "（无补充法条）"

_REPAIR_INSTRUCTION = (
    "上述输出无法解析。请重新仅输出四行结论，逐行以 罪名: 法条: 刑期: 罚金: "
    "开头，不要输出其他内容。"
)

_LABELS = ("罪名", "法条", "刑期", "罚金")
_LABEL_RE = {
    label: re.compile(rf"^{label}[:：]\s*(.*)$") for label in _LABELS
}


class Provenance(str, Enum):
    GENERATED = "generated"
    HUMAN_EDITED = "human_edited"
    GROUND_TRUTH = "ground_truth"


@dataclass(frozen=True)
class IntermediateConclusion:
    """The reviewable four-field conclusion formed before writing."""

    articles: tuple[str, ...]
    charges: tuple[str, ...]
    term: PrisonTerm
    fine: FineAmount
    provenance: Provenance = Provenance.GENERATED

    def __post_init__(self) -> None:
        object.__setattr__(self, "articles", tuple(self.articles))
        object.__setattr__(self, "charges", tuple(self.charges))
        if not self.charges:
            raise ValueError("charges must be non-empty")
        for label in self.charges:
            if not label.endswith("罪"):
                raise ValueError(f"charge label must end with 罪: {label!r}")
        if len(set(self.charges)) != len(self.charges):
            raise ValueError("duplicate charge labels")
        if not self.articles:
            raise ValueError("articles must be non-empty")
        if len(set(self.articles)) != len(self.articles):
            raise ValueError("duplicate article ids")
        for article_id in self.articles:
            parse_article_id(article_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "articles": list(self.articles),
            "charges": list(self.charges),
            "term": self.term.to_dict(),
            "fine": self.fine.to_dict(),
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntermediateConclusion":
        return cls(
            articles=tuple(d["articles"]),
            charges=tuple(d["charges"]),
            term=PrisonTerm.from_dict(d["term"]),
            fine=FineAmount.from_dict(d["fine"]),
            provenance=Provenance(d.get("provenance", "generated")),
        )


def conclusion_from_elements(
    e: CaseElements, provenance: Provenance = Provenance.GROUND_TRUTH
) -> IntermediateConclusion:
    return IntermediateConclusion(
        articles=tuple(sorted(e.articles, key=article_sort_key)),
        charges=tuple(sorted(e.charges)),
        term=e.term,
        fine=e.fine,
        provenance=provenance,
    )


def render_elements_block(
    charges: Iterable[str],
    article_ids: Iterable[str],
    term: PrisonTerm,
    fine: FineAmount,
) -> str:
    """The canonical four-line block for any element tuple."""
    term_value = "无" if term.kind is TermKind.NONE else render_term_phrase(term)
    if fine.kind is FineKind.NONE:
        fine_value = "无"
    elif fine.kind is FineKind.CONFISCATION:
        fine_value = render_fine_phrase(fine)
    else:
        fine_value = render_fine_phrase(fine).removeprefix("罚金")
    return (
        f"罪名: {';'.join(charges)}\n"
        f"法条: {';'.join(article_ids)}\n"
        f"刑期: {term_value}\n"
        f"罚金: {fine_value}"
    )


def render_conclusion(j: IntermediateConclusion) -> str:
    return render_elements_block(j.charges, j.articles, j.term, j.fine)


def _parse_charges_value(value: str) -> tuple[str, ...]:
    labels: list[str] = []
    for part in re.split("[;；]", value):
        label = canonicalize_charge(part)
        if not label:
            continue
        if not label.endswith("罪"):
            raise ValueError(f"charge label must end with 罪: {label!r}")
        if label not in labels:
            labels.append(label)
    if not labels:
        raise ValueError("no charge labels")
    return tuple(labels)


def _parse_articles_value(value: str) -> tuple[str, ...]:
    ids: list[str] = []
    for part in re.split("[;；]", value):
        article_id = part.strip()
        if not article_id:
            continue
        parse_article_id(article_id)
        if article_id not in ids:
            ids.append(article_id)
    if not ids:
        raise ValueError("no article ids")
    return tuple(ids)


def _parse_term_value(value: str) -> PrisonTerm:
    value = value.strip()
    if not value:
        raise ValueError("empty term value")
    if value == "无":
        return PrisonTerm.none()
    if re.fullmatch(f"[{NUMERAL_CHARS}]+", value):
        months = parse_chinese_numeral(value)
        return PrisonTerm.fixed(months) if months else PrisonTerm.none()
    term = scan_term(value)
    if term is None:
        raise ValueError(f"unparseable term: {value!r}")
    return term


def _parse_fine_value(value: str) -> FineAmount:
    value = value.strip()
    if not value:
        raise ValueError("empty fine value")
    if value == "无":
        return FineAmount.none()
    if "没收个人全部财产" in value:
        return FineAmount.confiscation()
    m = re.fullmatch(rf"(?:罚金)?(?:人民币)?([{NUMERAL_CHARS}]+)元?", value)
    if m is None:
        raise ValueError(f"unparseable fine: {value!r}")
    cny = parse_chinese_numeral(m.group(1))
    return FineAmount.amount(cny) if cny else FineAmount.none()


_VALUE_PARSERS = {
    "罪名": _parse_charges_value,
    "法条": _parse_articles_value,
    "刑期": _parse_term_value,
    "罚金": _parse_fine_value,
}


def parse_conclusion(reply: str) -> IntermediateConclusion:
    """Find the first well-formed tuple block anywhere in the reply.

    A block is four consecutive non-blank lines labeled 罪名/法条/刑期/罚金
    in that order; surrounding prose and code fences are ignored.
    """
    lines = [line.strip() for line in reply.splitlines()]
    lines = [line for line in lines if line]
    first_failure: str | None = None
    for i, line in enumerate(lines):
        if not _LABEL_RE["罪名"].match(line):
            continue
        if i + 4 > len(lines):
            break
        try:
            values = {}
            for offset, label in enumerate(_LABELS):
                m = _LABEL_RE[label].match(lines[i + offset])
                if m is None:
                    raise ValueError(f"expected {label} line")
                values[label] = _VALUE_PARSERS[label](m.group(1))
            return IntermediateConclusion(
                articles=values["法条"],
                charges=values["罪名"],
                term=values["刑期"],
                fine=values["罚金"],
                provenance=Provenance.GENERATED,
            )
        except ValueError as exc:
            if first_failure is None:
                first_failure = str(exc)
    raise ConclusionParseError(first_failure or "no tuple block found")


def build_ice_prompt(
    fact: str, e_case: CaseElements, a_ext: Sequence[LawArticle]
) -> str:
    """Analogy prompt: current fact, precedent fact and elements, extra law."""
    precedent_block = render_elements_block(
        sorted(e_case.charges),
        sorted(e_case.articles, key=article_sort_key),
        e_case.term,
        e_case.fine,
    )
    if a_ext:
        ext_lines = "\n".join(f"[{a.id}] {a.text}" for a in a_ext)
    else:
        ext_lines = NO_EXTERNAL_ARTICLES_MARKER
    return (
        "你是刑事审判辅助系统。请对照参考判例，对当前案件先作出初步结论。\n"
        "\n"
        "【当前案件事实】\n"
        f"{fact}\n"
        "\n"
        "【参考判例事实】\n"
        f"{e_case.fact}\n"
        "\n"
        "【参考判例要素】\n"
        f"{precedent_block}\n"
        "\n"
        "【补充法条】\n"
        f"{ext_lines}\n"
        "\n"
        "【输出要求】\n"
        "仅输出四行结论，逐行以标签开头，格式如下：\n"
        "罪名: <一项或多项，以;分隔，每项以罪字结尾>\n"
        "法条: <法律名#条号 或 法律名#条号.款号，以;分隔>\n"
        "刑期: <有期徒刑X年X个月 / 拘役X个月 / 无期徒刑 / 死刑 / 无>\n"
        "罚金: <人民币X元 / 没收个人全部财产 / 无>\n"
    )


def emulate_conclusion(
    backend: GenerationBackend, prompt: str, params: GenerationParams
) -> IntermediateConclusion:
    """Generate and parse a conclusion, retrying once with a format reminder."""
    reply = backend.generate(prompt, params)
    try:
        return parse_conclusion(reply)
    except ConclusionParseError:
        pass
    reply = backend.generate(prompt + "\n\n" + _REPAIR_INSTRUCTION, params)
    return parse_conclusion(reply)


def apply_human_edit(
    base: IntermediateConclusion, patch: Mapping[str, Any]
) -> IntermediateConclusion:
    """Apply a field-level patch; the result is marked human-edited."""
    coercers = {
        "charges": _coerce_charges,
        "articles": _coerce_articles,
        "term": _coerce_term,
        "fine": _coerce_fine,
    }
    for field in patch:
        if field not in coercers:
            raise InvalidEditError(field, "unknown field")
    updates: dict[str, Any] = {}
    for field, coerce in coercers.items():
        if field not in patch:
            continue
        try:
            updates[field] = coerce(patch[field])
        except (ValueError, TypeError, KeyError) as exc:
            raise InvalidEditError(field, str(exc)) from None
    try:
        return replace(base, provenance=Provenance.HUMAN_EDITED, **updates)
    except ValueError as exc:
        raise InvalidEditError("patch", str(exc)) from None


def _coerce_charges(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        return _parse_charges_value(value)
    if isinstance(value, (list, tuple)):
        return _parse_charges_value(";".join(str(v) for v in value))
    raise ValueError("charges must be a string or list of labels")


def _coerce_articles(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        return _parse_articles_value(value)
    if isinstance(value, (list, tuple)):
        return _parse_articles_value(";".join(str(v) for v in value))
    raise ValueError("articles must be a string or list of ids")


def _coerce_term(value: Any) -> PrisonTerm:
    if isinstance(value, PrisonTerm):
        return value
    if isinstance(value, bool):
        raise ValueError("term must be a phrase, month count, or kind/months object")
    if isinstance(value, int):
        return PrisonTerm.fixed(value) if value else PrisonTerm.none()
    if isinstance(value, str):
        return _parse_term_value(value)
    if isinstance(value, Mapping):
        return PrisonTerm.from_dict(dict(value))
    raise ValueError("term must be a phrase, month count, or kind/months object")


def _coerce_fine(value: Any) -> FineAmount:
    if isinstance(value, FineAmount):
        return value
    if isinstance(value, bool):
        raise ValueError("fine must be a phrase, yuan amount, or kind/cny object")
    if isinstance(value, int):
        return FineAmount.amount(value) if value else FineAmount.none()
    if isinstance(value, str):
        return _parse_fine_value(value)
    if isinstance(value, Mapping):
        return FineAmount.from_dict(dict(value))
    raise ValueError("fine must be a phrase, yuan amount, or kind/cny object")


class CopyPrecedentModel:
    """Degenerate analogy backend: echoes the precedent's element block.

    Finds the first valid tuple block in the prompt (the precedent elements
    section) and returns it verbatim, ignoring the fact entirely.
    """

    def generate(self, prompt: str, params: GenerationParams) -> str:
        try:
            j = parse_conclusion(prompt)
        except ConclusionParseError:
            return "（参考资料中没有可复述的结论）"
        return render_conclusion(j)

    def probe(self) -> bool:
        return True
