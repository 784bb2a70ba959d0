"""Corpus types, JSONL round trips, and aggregate statistics."""

import json

import pytest

from judgekit.corpus import (
    CaseDocument,
    LawArticle,
    article_sort_key,
    corpus_stats,
    format_article_id,
    is_multi_defendant,
    load_case_corpus,
    load_law_corpus,
    parse_article_id,
    save_case_corpus,
    save_law_corpus,
)
from judgekit.errors import DuplicateIdError, FormatError, MismatchedIdsError
from judgekit.extract import extract_elements

from _fixtures import fixture_case, fixture_law_corpus


# ---- article ids ----

@pytest.mark.parametrize("law,no,sub", [
    ("刑法", 264, None),
    ("刑法", 264, 1),
    ("道路交通安全法", 91, 2),
])
def test_article_id_round_trip(law, no, sub):
    assert parse_article_id(format_article_id(law, no, sub)) == (law, no, sub)


@pytest.mark.parametrize("bad", ["", "刑法", "#264", "刑法#", "刑法#abc", "刑法#0", "刑法#264.0"])
def test_parse_article_id_rejects(bad):
    with pytest.raises(ValueError):
        parse_article_id(bad)


def test_article_sort_key_is_numeric():
    ids = ["刑法#264", "刑法#52", "刑法#52.2", "刑法#52.1", "禁毒法#3"]
    got = sorted(ids, key=article_sort_key)
    assert got == ["刑法#52", "刑法#52.1", "刑法#52.2", "刑法#264", "禁毒法#3"]


def test_law_article_validation():
    with pytest.raises(ValueError):
        LawArticle(law_name="刑#法", article_no=1, sub_no=None, text="x")
    with pytest.raises(ValueError):
        LawArticle(law_name="刑法", article_no=0, sub_no=None, text="x")
    with pytest.raises(ValueError):
        LawArticle(law_name="刑法", article_no=1, sub_no=None, text="  ")


def test_case_document_validation():
    with pytest.raises(ValueError):
        CaseDocument(case_id=" ", heading="h", fact="f", reasoning="r", judgment_result="j")
    with pytest.raises(ValueError):
        CaseDocument(case_id="c", heading="h", fact=" ", reasoning="r", judgment_result="j")


# ---- JSONL persistence ----

def test_law_corpus_round_trip(tmp_path):
    articles = fixture_law_corpus(n_distractors=5)
    path = tmp_path / "laws.jsonl"
    save_law_corpus(articles, path)
    assert load_law_corpus(path) == articles


def test_case_corpus_round_trip(tmp_path):
    cases = [fixture_case(i, f"case-{i}") for i in range(4)]
    path = tmp_path / "cases.jsonl"
    save_case_corpus(cases, path)
    assert load_case_corpus(path) == cases


def test_load_skips_blank_lines(tmp_path):
    record = fixture_case(0, "case-0").to_dict()
    path = tmp_path / "cases.jsonl"
    path.write_text("\n" + json.dumps(record, ensure_ascii=False) + "\n\n", encoding="utf-8")
    assert len(load_case_corpus(path)) == 1


def test_format_error_reports_line_number(tmp_path):
    good = json.dumps(fixture_law_corpus(0)[0].to_dict(), ensure_ascii=False)
    path = tmp_path / "laws.jsonl"
    path.write_text(good + "\n{not json\n", encoding="utf-8")
    with pytest.raises(FormatError) as info:
        load_law_corpus(path)
    assert info.value.line_no == 2


def test_format_error_on_missing_field(tmp_path):
    path = tmp_path / "laws.jsonl"
    path.write_text('{"law_name": "刑法", "text": "t"}\n', encoding="utf-8")
    with pytest.raises(FormatError) as info:
        load_law_corpus(path)
    assert info.value.line_no == 1


def test_format_error_on_non_object(tmp_path):
    path = tmp_path / "laws.jsonl"
    path.write_text("[1, 2]\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_law_corpus(path)


def test_duplicate_article_id(tmp_path):
    record = json.dumps(fixture_law_corpus(0)[0].to_dict(), ensure_ascii=False)
    path = tmp_path / "laws.jsonl"
    path.write_text(record + "\n" + record + "\n", encoding="utf-8")
    with pytest.raises(DuplicateIdError):
        load_law_corpus(path)


def test_duplicate_case_id(tmp_path):
    record = json.dumps(fixture_case(0, "case-0").to_dict(), ensure_ascii=False)
    path = tmp_path / "cases.jsonl"
    path.write_text(record + "\n" + record + "\n", encoding="utf-8")
    with pytest.raises(DuplicateIdError):
        load_case_corpus(path)


# ---- statistics ----

def test_corpus_stats():
    cases = [fixture_case(i, f"case-{i}") for i in range(3)]
    elements = [extract_elements(c) for c in cases]
    stats = corpus_stats(cases, elements)
    assert stats.n_documents == 3
    assert stats.n_unique_charges == 3
    # every fixture cites its own main article plus the shared 刑法#52
    assert stats.n_unique_articles == 4
    assert stats.avg_articles_per_doc == 2.0
    assert stats.avg_fact_length == pytest.approx(
        sum(len(c.fact) for c in cases) / 3)


def test_corpus_stats_id_mismatch():
    cases = [fixture_case(0, "case-0")]
    elements = [extract_elements(fixture_case(1, "case-1"))]
    with pytest.raises(MismatchedIdsError):
        corpus_stats(cases, elements)


def test_multi_defendant_heuristic():
    single = fixture_case(0, "case-0")
    assert not is_multi_defendant(single)
    double = CaseDocument(
        case_id="c", heading="h",
        fact="被告人张三、被告人李四共同盗窃财物。",
        reasoning="本院认为，被告人张三、被告人李四的行为均已构成盗窃罪。",
        judgment_result="判决如下：被告人张三犯盗窃罪，判处拘役三个月；"
                        "被告人李四犯盗窃罪，判处拘役二个月。",
    )
    assert is_multi_defendant(double)
    prose_only = CaseDocument(
        case_id="c2", heading="h",
        fact="被告人王某于夜间在仓库盗窃财物。",
        reasoning="本院认为，被告人的行为已构成盗窃罪。",
        judgment_result="判决如下：被告人王某犯盗窃罪，判处拘役三个月。",
    )
    assert not is_multi_defendant(prose_only)
