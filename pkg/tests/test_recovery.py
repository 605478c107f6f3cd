import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from redflagcds.domain import Decision, RedFlag, Vignette
from redflagcds.recovery import (
    NoJsonFound,
    SchemaUnusable,
    Strategy,
    extract_json,
    parse_baseline,
    parse_routing,
    parse_verdict,
    repair_json_text,
)
from tests.conftest import TABLE1_RAW


class TestExtractJson:
    def test_table1_console_output_is_strict(self):
        outcome = extract_json(TABLE1_RAW)
        assert outcome.strategy_used is Strategy.STRICT
        assert outcome.value["next"] == ["meningismus"]
        assert len(outcome.value["evidence"]) == 7
        assert "46 white cells (69% neutrophils)/μl" in outcome.value["evidence"]

    def test_fenced_block(self):
        raw = (
            "Sure! Here is the routing:\n```json\n"
            '{"next": [], "why": "no criteria met", "evidence": []}\n```\nHope this helps.'
        )
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.FENCED_BLOCK
        assert outcome.value == {"next": [], "why": "no criteria met", "evidence": []}

    def test_fence_without_language_tag(self):
        raw = 'prefix\n```\n{"next": ["thunderclap"]}\n```'
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.FENCED_BLOCK
        assert outcome.value == {"next": ["thunderclap"]}

    def test_brace_span_in_prose(self):
        raw = 'The decision is {"next": ["papilledema"], "why": "x", "evidence": []} as stated.'
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.BRACE_SPAN
        assert outcome.value["next"] == ["papilledema"]

    def test_brace_inside_string_literal_ignored(self):
        raw = 'note {"next": ["meningismus"], "evidence": ["cells {69%} high"]} end'
        outcome = extract_json(raw)
        assert outcome.value["evidence"] == ["cells {69%} high"]

    def test_repair_trailing_comma(self):
        raw = 'answer: {"next": ["thunderclap",], "why": "x", "evidence": [],}'
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.REPAIRED
        assert outcome.value["next"] == ["thunderclap"]

    def test_repair_single_quotes(self):
        raw = "{'next': ['meningismus'], 'why': 'stiff neck', 'evidence': []}"
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.REPAIRED
        assert outcome.value["why"] == "stiff neck"

    def test_repair_line_comments(self):
        raw = '{"next": ["papilledema"], // routed agent\n "why": "x", "evidence": []}'
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.REPAIRED
        assert outcome.value["next"] == ["papilledema"]

    def test_no_brace_at_all(self):
        with pytest.raises(NoJsonFound):
            extract_json("no json here at all")

    def test_unbalanced_brace(self):
        with pytest.raises(NoJsonFound):
            extract_json('{"next": ["thunderclap"')

    def test_strict_span_covers_trimmed_input(self):
        raw = '  {"a": 1}  '
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.STRICT
        start, end = outcome.extracted_span
        assert raw[start:end] == raw.strip()

    def test_skips_unparseable_brace_then_finds_later_one(self):
        raw = '{not json} and then {"next": []}'
        outcome = extract_json(raw)
        assert outcome.strategy_used is Strategy.BRACE_SPAN
        assert outcome.value == {"next": []}


json_values = st.recursive(
    st.one_of(
        st.none(),
        st.booleans(),
        st.integers(min_value=-(10**6), max_value=10**6),
        st.text(max_size=20),
    ),
    lambda children: st.one_of(
        st.lists(children, max_size=4),
        st.dictionaries(st.text(max_size=8), children, max_size=4),
    ),
    max_leaves=10,
)
json_objects = st.dictionaries(st.text(max_size=8), json_values, max_size=4)
prose = st.text(
    alphabet=st.characters(blacklist_characters="{}`\"'"), max_size=40
)


@given(doc=json_objects)
def test_strict_idempotence(doc):
    raw = json.dumps(doc)
    outcome = extract_json(raw)
    assert outcome.strategy_used is Strategy.STRICT
    assert outcome.value == json.loads(raw)


@given(doc=json_objects, prefix=prose, suffix=prose)
def test_embedding_invariance(doc, prefix, suffix):
    raw = prefix + json.dumps(doc) + suffix
    assert extract_json(raw).value == doc


@given(doc=json_objects, prefix=prose, suffix=prose)
def test_fence_invariance(doc, prefix, suffix):
    raw = prefix + "\n```json\n" + json.dumps(doc) + "\n```\n" + suffix
    assert extract_json(raw).value == doc


class TestParseRouting:
    def test_table1_example(self, vignette):
        decision, warnings = parse_routing(TABLE1_RAW, vignette)
        assert [f.value for f in decision.next] == ["meningismus"]
        assert decision.why.startswith("patient has meningismus")
        assert len(decision.evidence) == 7
        assert warnings == []

    def test_scalar_next_coerced(self, vignette):
        raw = '{"next": "thunderclap", "why": "sudden onset", "evidence": []}'
        decision, warnings = parse_routing(raw, vignette)
        assert [f.value for f in decision.next] == ["thunderclap"]
        kinds = {w.split(":")[0] for w in warnings}
        assert kinds == {"CoercedScalarNext", "EvidenceMissing"}

    def test_no_next_member_is_unusable(self, vignette):
        with pytest.raises(SchemaUnusable):
            parse_routing('{"why": "x"}', vignette)

    def test_unknown_names_dropped_with_warning(self, vignette):
        raw = '{"next": ["migraine", "papilledema"], "why": "x", "evidence": ["q"]}'
        decision, warnings = parse_routing(raw, vignette)
        assert [f.value for f in decision.next] == ["papilledema"]
        assert any(w.startswith("UnknownAgentName") for w in warnings)

    def test_duplicates_deduplicated_with_warning(self, vignette):
        raw = '{"next": ["meningismus", "meningismus"], "why": "x", "evidence": ["q"]}'
        decision, warnings = parse_routing(raw, vignette)
        assert [f.value for f in decision.next] == ["meningismus"]
        assert any(w.startswith("DuplicateAgent") for w in warnings)

    def test_missing_why_and_evidence_default_with_warnings(self, vignette):
        decision, warnings = parse_routing('{"next": []}', vignette)
        assert decision.why == ""
        assert decision.evidence == ()
        kinds = {w.split(":")[0] for w in warnings}
        assert {"MissingWhy", "MissingEvidence"} <= kinds

    def test_no_json_propagates(self, vignette):
        with pytest.raises(NoJsonFound):
            parse_routing("nothing to see", vignette)


class TestParseVerdict:
    def test_yes_with_rationale(self):
        raw = "YES. The headache reached maximal severity within one hour during exertion."
        v = parse_verdict(raw, RedFlag.THUNDERCLAP)
        assert v.decision is Decision.YES
        assert v.rationale == "The headache reached maximal severity within one hour during exertion."
        assert v.raw == raw

    def test_no_case_insensitive(self):
        v = parse_verdict("No — fundoscopy was normal.", RedFlag.PAPILLEDEMA)
        assert v.decision is Decision.NO
        assert v.rationale == "fundoscopy was normal."

    def test_no_token_yields_error(self):
        v = parse_verdict("The findings are equivocal.", RedFlag.MENINGISMUS)
        assert v.decision is Decision.ERROR
        assert v.error_detail == "no YES/NO token"

    def test_first_token_wins(self):
        raw = "Yes. Although one could argue no, the sudden onset is documented."
        assert parse_verdict(raw, RedFlag.THUNDERCLAP).decision is Decision.YES

    def test_token_must_stand_alone(self):
        v = parse_verdict("The eyes were normal; nothing notable.", RedFlag.PAPILLEDEMA)
        assert v.decision is Decision.ERROR

    def test_evidence_from_quoted_substrings(self):
        raw = 'YES. The note says "stiff neck" and "fever" explicitly.'
        v = parse_verdict(raw, RedFlag.MENINGISMUS)
        assert v.evidence == ("stiff neck", "fever")

    def test_empty_input(self):
        v = parse_verdict("", RedFlag.THUNDERCLAP)
        assert v.decision is Decision.ERROR


@given(raw=st.text(max_size=200))
def test_parse_verdict_is_total(raw):
    v = parse_verdict(raw, RedFlag.SYSTEMIC_ILLNESS)
    assert v.decision in (Decision.YES, Decision.NO, Decision.ERROR)
    assert v.raw == raw


class TestParseBaseline:
    SEVEN_LINES = "\n".join(
        [
            "thunderclap: NO — not documented",
            'meningismus: YES — "stiff neck" with fever',
            "papilledema: NO — normal fundoscopy",
            "temporal_arteritis: NO",
            "systemic_illness: YES — fever and weight loss",
            "focal_deficits: NO",
            "first_worst_headache: NO",
        ]
    )

    def test_seven_well_formed_lines(self):
        verdicts = parse_baseline(self.SEVEN_LINES)
        assert len(verdicts) == 7
        yes = {f.value for f, v in verdicts.items() if v.decision is Decision.YES}
        assert yes == {"meningismus", "systemic_illness"}
        assert verdicts[RedFlag.MENINGISMUS].evidence == ("stiff neck",)

    def test_missing_line_becomes_error(self):
        partial = "\n".join(
            line for line in self.SEVEN_LINES.splitlines() if not line.startswith("focal")
        )
        verdicts = parse_baseline(partial)
        assert verdicts[RedFlag.FOCAL_DEFICITS].decision is Decision.ERROR

    def test_empty_response_gives_seven_errors(self):
        verdicts = parse_baseline("")
        assert len(verdicts) == 7
        assert all(v.decision is Decision.ERROR for v in verdicts.values())

    def test_numbered_and_case_variant_lines(self):
        raw = "1. Thunderclap: yes — sudden onset\n2) meningismus: No"
        verdicts = parse_baseline(raw)
        assert verdicts[RedFlag.THUNDERCLAP].decision is Decision.YES
        assert verdicts[RedFlag.MENINGISMUS].decision is Decision.NO


class TestRepairJsonText:
    def test_preserves_content_inside_strings(self):
        raw = '{"a": "keep, this // and \'this\'"}'
        assert json.loads(repair_json_text(raw)) == {"a": "keep, this // and 'this'"}

    def test_removes_trailing_comma_before_newline_bracket(self):
        raw = '{"a": [1, 2,\n]}'
        assert json.loads(repair_json_text(raw)) == {"a": [1, 2]}
