"""Final document synthesis: prompt, generation, validation, template fill.

The synthesis prompt carries the fact, the canonical conclusion block, the
full precedent document as a stylistic exemplar, and a structural template.
Generated text is segmented on the template's fixed section headers
(经审理查明 / 本院认为 / 判决如下) and validated; the deterministic
render_template below fills the same template directly from an element tuple
and is exact under extraction, which is what the round-trip tests lean on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

from .backends import GenerationBackend, GenerationParams
from .conclusion import IntermediateConclusion, parse_conclusion, render_conclusion
from .corpus import CaseDocument, article_sort_key, parse_article_id
from .errors import (
    ConclusionParseError,
    MalformedDocumentError,
    TemplateError,
)
from .extract import (
    CaseElements,
    FineKind,
    PrisonTerm,
    TermKind,
    extract_charges,
    render_fine_phrase,
    render_term_phrase,
    segment_text,
)
from .numerals import int_to_chinese

_PLACEHOLDERS = ("heading", "fact", "reasoning_skeleton", "result_skeleton")
_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


class DocumentSource(str, Enum):
    GENERATED = "generated"
    TEMPLATE_FILL = "template_fill"


@dataclass(frozen=True)
class DocumentTemplate:
    name: str
    body: str

    def __post_init__(self) -> None:
        found = _PLACEHOLDER_RE.findall(self.body)
        for ph in _PLACEHOLDERS:
            n = found.count(ph)
            if n != 1:
                raise TemplateError(
                    f"template {self.name!r}: placeholder {{{ph}}} appears "
                    f"{n} times, expected exactly once"
                )
        unknown = set(found) - set(_PLACEHOLDERS)
        if unknown:
            raise TemplateError(
                f"template {self.name!r}: unknown placeholders {sorted(unknown)}"
            )

    def fill(self, **values: str) -> str:
        out = self.body
        for key in _PLACEHOLDERS:
            out = out.replace("{" + key + "}", values[key])
        return out

    @classmethod
    def from_file(cls, path: str | Path) -> "DocumentTemplate":
        p = Path(path)
        return cls(name=p.stem, body=p.read_text(encoding="utf-8"))


_default_template: DocumentTemplate | None = None


def default_template() -> DocumentTemplate:
    global _default_template
    if _default_template is None:
        body = (
            resources.files("judgekit") / "templates" / "default.tmpl"
        ).read_text(encoding="utf-8")
        _default_template = DocumentTemplate(name="default", body=body)
    return _default_template


@dataclass(frozen=True)
class JudgmentDocument:
    """A complete generated judgment, segmented and validated."""

    heading: str
    fact_section: str
    reasoning: str
    judgment_result: str
    full_text: str
    source: DocumentSource

    def __post_init__(self) -> None:
        pos = 0
        for name, section in (
            ("heading", self.heading),
            ("fact", self.fact_section),
            ("reasoning", self.reasoning),
            ("judgment_result", self.judgment_result),
        ):
            idx = self.full_text.find(section, pos)
            if idx < 0:
                raise MalformedDocumentError(
                    f"{name} section is not contiguous in full_text"
                )
            pos = idx + len(section)
        if not extract_charges(self.judgment_result):
            raise MalformedDocumentError("judgment result names no charge")

    def to_dict(self) -> dict[str, Any]:
        return {
            "heading": self.heading,
            "fact_section": self.fact_section,
            "reasoning": self.reasoning,
            "judgment_result": self.judgment_result,
            "full_text": self.full_text,
            "source": self.source.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JudgmentDocument":
        return cls(
            heading=d["heading"],
            fact_section=d["fact_section"],
            reasoning=d["reasoning"],
            judgment_result=d["judgment_result"],
            full_text=d["full_text"],
            source=DocumentSource(d["source"]),
        )


def document_from_text(text: str, source: DocumentSource) -> JudgmentDocument:
    heading, fact, reasoning, judgment_result = segment_text(text)
    return JudgmentDocument(
        heading=heading,
        fact_section=fact,
        reasoning=reasoning,
        judgment_result=judgment_result,
        full_text=text,
        source=source,
    )


def _citation_phrase(article_ids: tuple[str, ...]) -> str:
    """依照-clause body: articles grouped by law, in the given order."""
    parts: list[str] = []
    current_law: str | None = None
    for article_id in article_ids:
        law, no, sub = parse_article_id(article_id)
        ref = f"第{int_to_chinese(no)}条"
        if sub is not None:
            ref += f"第{int_to_chinese(sub)}款"
        if law != current_law:
            parts.append(f"《{law}》{ref}")
            current_law = law
        else:
            parts.append(ref)
    return "、".join(parts)


def _sorted_ids(ids) -> tuple[str, ...]:
    return tuple(sorted(ids, key=article_sort_key))


def render_template(
    elements: CaseElements | IntermediateConclusion,
    fact: str | None = None,
    template: DocumentTemplate | None = None,
    heading: str | None = None,
) -> JudgmentDocument:
    """Deterministically write a full judgment from an element tuple.

    extract_elements inverts this exactly: charges, articles, term, fine,
    fact, and (via the heading docket number) case_id all round-trip.
    """
    template = template or default_template()
    if isinstance(elements, CaseElements):
        fact = elements.fact if fact is None else fact
        charges = tuple(sorted(elements.charges))
        articles = _sorted_ids(elements.articles)
        if heading is None:
            heading = (
                f"（{elements.case_id}）刑事判决书" if elements.case_id
                else "刑事判决书"
            )
    else:
        if fact is None:
            raise ValueError("fact is required when rendering a conclusion")
        charges = elements.charges
        articles = elements.articles
        if heading is None:
            heading = "刑事判决书"
    term, fine = elements.term, elements.fine

    reasoning = f"被告人的行为已构成{'、'.join(charges)}。"
    if articles:
        reasoning += f"依照{_citation_phrase(articles)}之规定，应予惩处。"

    result = f"被告人犯{'、'.join(charges)}"
    if term.kind is not TermKind.NONE:
        result += f"，判处{render_term_phrase(term)}"
    if fine.kind is not FineKind.NONE:
        joiner = "并处" if term.kind is not TermKind.NONE else "判处"
        result += f"，{joiner}{render_fine_phrase(fine)}"
    if term.kind is TermKind.NONE and fine.kind is FineKind.NONE:
        result += "，免予刑事处罚"
    result += "。"

    text = template.fill(
        heading=heading,
        fact=fact,
        reasoning_skeleton=reasoning,
        result_skeleton=result,
    )
    return document_from_text(text, DocumentSource.TEMPLATE_FILL)


def build_jus_prompt(
    fact: str,
    j_pre: IntermediateConclusion,
    c_doc: CaseDocument,
    template: DocumentTemplate | None = None,
) -> str:
    """Synthesis prompt: fact, conclusion block, precedent text, template."""
    template = template or default_template()
    return (
        "你是刑事判决书撰写系统。请依据初步结论撰写完整判决书。\n"
        "\n"
        "【当前案件事实】\n"
        f"{fact}\n"
        "\n"
        "【初步结论】\n"
        f"{render_conclusion(j_pre)}\n"
        "\n"
        "【参考判例全文】\n"
        f"{c_doc.full_text}\n"
        "\n"
        "【文书模板】\n"
        f"{template.body}\n"
        "\n"
        "【输出要求】\n"
        "按模板结构输出完整判决书，必须包含 经审理查明、本院认为、判决如下 "
        "三个部分；罪名、法条、刑期、罚金须与初步结论逐项一致；事实部分使用"
        "当前案件事实原文。\n"
    )


def synthesize_document(
    backend: GenerationBackend, prompt: str, params: GenerationParams
) -> JudgmentDocument:
    """Generate the final document and validate its structure."""
    text = backend.generate(prompt, params)
    return document_from_text(text, DocumentSource.GENERATED)


def _prompt_section(prompt: str, name: str) -> str | None:
    marker = f"【{name}】"
    i = prompt.find(marker)
    if i < 0:
        return None
    j = prompt.find("【", i + len(marker))
    chunk = prompt[i + len(marker):j if j >= 0 else len(prompt)]
    return chunk.strip()


class TemplateFillModel:
    """Deterministic generation backend that fills the document template.

    Reads the fact and the conclusion block back out of the prompt and
    renders the template directly, so the output document's extracted
    elements equal the conclusion by construction.
    """

    def __init__(self, template: DocumentTemplate | None = None):
        self.template = template or default_template()

    def generate(self, prompt: str, params: GenerationParams) -> str:
        fact = _prompt_section(prompt, "当前案件事实")
        if fact is None:
            return "（提示词中缺少案件事实）"
        try:
            j = parse_conclusion(prompt)
        except ConclusionParseError:
            return "（提示词中缺少初步结论）"
        doc = render_template(j, fact=fact, template=self.template)
        return doc.full_text

    def probe(self) -> bool:
        return True
