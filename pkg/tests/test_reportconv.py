import json
from fractions import Fraction

import pytest

from wsc.labels import LabelVocabulary
from wsc.reportconv import (
    Report,
    RuleSet,
    convert,
    decide_labels,
    extract_entities,
    parse_ratio,
    read_reports_jsonl,
    split_phrases,
    standardize,
)


@pytest.fixture(scope="module")
def vocab():
    return LabelVocabulary.default()


@pytest.fixture(scope="module")
def rules():
    r = RuleSet.default()
    r.validate_against(LabelVocabulary.default())
    return r


class TestStandardize:
    def test_dr_abbreviation(self, rules):
        assert standardize("糖网", rules) == "糖尿病视网膜病变"

    def test_nerve_fiber_abbreviation(self, rules):
        assert standardize("RNFLD", rules) == "神经纤维层缺损"

    def test_unknown_text_passes_through(self, rules):
        assert standardize("完全未知的内容xyz", rules) == "完全未知的内容xyz"

    def test_longest_match_wins(self, rules):
        # 老花眼 must not be rewritten via the shorter 老花 surface first
        assert standardize("老花眼", rules) == "老视"

    def test_idempotent_on_bundled_rules(self, rules):
        samples = [
            "糖网，RNFLD，建议复查",
            "双眼晶状体混浊",
            "视网膜动脉狭窄，AMD，drusen",
            "眼底正常",
            "近视弧，光凝斑",
        ]
        for text in samples:
            once = standardize(text, rules)
            assert standardize(once, rules) == once

    def test_rewrite_cycle_rejected_at_load(self):
        with pytest.raises(ValueError):
            RuleSet([("飞蚊", "飞蚊症")], ["，"], [], [], [])


class TestSplitPhrases:
    def test_mixed_delimiters(self, rules):
        assert split_phrases(Report("x", "A，B；C"), rules) == ["A", "B", "C"]

    def test_empty_report(self, rules):
        assert split_phrases(Report("x", ""), rules) == []

    def test_single_phrase(self, rules):
        assert split_phrases(Report("x", "没有分隔符"), rules) == ["没有分隔符"]

    def test_ascii_period_spares_decimals(self, rules):
        assert split_phrases(Report("x", "杯盘比大于0.5"), rules) == ["杯盘比大于0.5"]
        assert split_phrases(Report("x", "第一句.第二句"), rules) == ["第一句", "第二句"]

    def test_text_truncated_to_max_len(self):
        report = Report("x", "甲" * 250)
        assert len(report.text) == 100
        report = Report("x", "甲" * 250, max_len=10)
        assert len(report.text) == 10


class TestParseRatio:
    def test_decimal(self):
        assert parse_ratio("0.5") == Fraction(1, 2)

    def test_colon_ratio(self):
        assert parse_ratio("2:3") == Fraction(2, 3)
        assert parse_ratio("2：3") == Fraction(2, 3)

    def test_slash_ratio(self):
        assert parse_ratio("3/4") == Fraction(3, 4)

    def test_malformed(self):
        with pytest.raises(ValueError):
            parse_ratio("abc")
        with pytest.raises(ZeroDivisionError):
            parse_ratio("2:0")


class TestExtractEntities:
    def test_advice_phrase_filtered(self, rules):
        analysis = extract_entities("建议FFA检查", rules)
        assert analysis.filtered and analysis.entities == ()

    def test_cup_disk_ratio_capture(self, rules):
        analysis = extract_entities("杯盘比大于0.5", rules)
        assert not analysis.filtered
        ents = {e.name: e for e in analysis.entities}
        assert ents["杯盘比"].value == Fraction(1, 2)
        assert ents["杯盘比"].descriptor == "大于"

    def test_no_match_is_entity_free_not_filtered(self, rules):
        analysis = extract_entities("毫无规则可言的句子", rules)
        assert not analysis.filtered and analysis.entities == ()

    def test_malformed_numeric_voids_phrase(self, vocab):
        from wsc.reportconv import EntityRule, Pattern

        rules = RuleSet(
            [], ["，"], [],
            [EntityRule(Pattern(r"比值(?P<value>\d+:\d+)", True), "比值", True)],
            [],
        )
        analysis = extract_entities("比值2:0", rules)
        assert analysis.entities == () and not analysis.filtered


class TestDecideLabels:
    def test_cup_disk_ratio_rule(self, rules, vocab):
        label = convert(Report("x", "杯盘比大于0.5"), rules, vocab)
        assert label.names() == ("大视杯",)

    def test_arteriovenous_rule(self, rules, vocab):
        label = convert(Report("x", "动静脉比小于2:3"), rules, vocab)
        assert label.names() == ("动脉细",)

    def test_implication_semantics(self, rules, vocab):
        # an asserted value strictly above threshold fires the > rule
        assert convert(Report("x", "杯盘比约0.7"), rules, vocab).names() == ("大视杯",)
        # an asserted bound below threshold does not
        assert convert(Report("x", "杯盘比大于0.3"), rules, vocab).names() == ("其他",)
        assert convert(Report("x", "杯盘比0.4"), rules, vocab).names() == ("其他",)

    def test_unmatched_nonempty_falls_back_to_others(self, rules, vocab):
        label = convert(Report("x", "完全陌生的发现"), rules, vocab)
        assert label.names() == ("其他",)

    def test_empty_report_is_others_only(self, rules, vocab):
        assert convert(Report("x", ""), rules, vocab).names() == ("其他",)

    def test_decide_with_no_analyses(self, rules, vocab):
        label = decide_labels([], rules, vocab)
        assert label.names() == ("其他",)


class TestConvert:
    def test_normal_report(self, rules, vocab):
        label = convert(Report("x", "眼底未见明显异常"), rules, vocab)
        assert label.names() == ("正常眼底",)

    def test_union_across_phrases(self, rules, vocab):
        label = convert(Report("x", "视网膜出血，硬性渗出，建议复查"), rules, vocab)
        assert sorted(label.names()) == sorted(("出血", "硬渗"))

    def test_phrase_order_irrelevant(self, rules, vocab):
        a = convert(Report("x", "糖网，出血"), rules, vocab)
        b = convert(Report("x", "出血，糖网"), rules, vocab)
        assert a == b

    def test_filtered_phrases_contribute_no_bits(self, rules, vocab):
        with_advice = convert(Report("x", "出血，建议青光眼复查"), rules, vocab)
        assert with_advice.names() == ("出血",)

    def test_deterministic(self, rules, vocab):
        text = "双眼糖网，杯盘比大于0.5，建议FFA检查"
        first = convert(Report("x", text), rules, vocab)
        second = convert(Report("x", text), rules, vocab)
        assert first == second

    def test_negated_finding_not_extracted(self, rules, vocab):
        assert convert(Report("x", "未见出血"), rules, vocab).names() == ("其他",)
        assert convert(Report("x", "无出血"), rules, vocab).names() == ("其他",)


class TestRuleFileRoundTrip:
    def test_load_from_json_file(self, tmp_path, vocab):
        payload = {
            "delimiters": ["，"],
            "synonyms": [{"surface": "AA", "standard": "出血"}],
            "filters": [{"pattern": "建议"}],
            "entities": [{"pattern": "出血", "entity": "出血"}],
            "decisions": [{"entity": "出血", "comparator": "present", "category": "出血"}],
        }
        path = tmp_path / "rules.json"
        path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        rules = RuleSet.from_file(path)
        rules.validate_against(vocab)
        assert convert(Report("x", "AA"), rules, vocab).names() == ("出血",)

    def test_unknown_category_rejected(self, vocab):
        payload = {
            "delimiters": ["，"],
            "synonyms": [],
            "filters": [],
            "entities": [{"pattern": "出血", "entity": "出血"}],
            "decisions": [{"entity": "出血", "comparator": "present", "category": "不存在"}],
        }
        rules = RuleSet.from_dict(payload)
        with pytest.raises(ValueError):
            rules.validate_against(vocab)

    def test_bad_comparator_rejected(self):
        payload = {
            "delimiters": ["，"], "synonyms": [], "filters": [],
            "entities": [],
            "decisions": [{"entity": "x", "comparator": "!=", "category": "出血"}],
        }
        with pytest.raises(ValueError):
            RuleSet.from_dict(payload)


class TestReportIO:
    def test_read_reports_reports_bad_lines(self):
        lines = ['{"id": "a", "text": "ok"}', "not json", '{"id": "b"}']
        rows = list(read_reports_jsonl(lines))
        assert rows[0][2] is None and rows[0][1].id == "a"
        assert rows[1][2] is not None
        assert rows[2][2] is not None

    def test_blank_lines_skipped(self):
        assert list(read_reports_jsonl(["", "  ", "\n"])) == []
