from __future__ import annotations

import json

import pytest

from smartetl.errors import BudgetExceeded, ClassificationError, EndpointFailure, SchemaViolation, ShotTooLarge
from smartetl.gateway import Gateway, MockResponder
from smartetl.simulate import KeywordClassifier
from smartetl.taxonomy import (
    DOMAINS,
    BatchContext,
    ClassificationResult,
    ClassifyPolicy,
    ExpertScore,
    GoldDataset,
    build_classification_prompt,
    build_fewshot_prompts,
    build_taxonomy_prompt,
    classify_batch,
    extract_json_object,
    norm,
    parse_classification_response,
    plan_conversations,
    render_shot,
    select_categories,
    taxonomy_from_dict,
)
from smartetl.taxonomy.prompts import CLASSIFY_MARKER, CONTEXT_ONLY, EXAMPLE_MARKER, SHOT_SEPARATOR, pack_texts

from .conftest import make_record

TO, MK, MO = DOMAINS


# ---------------------------------------------------------------- model

def test_bundled_taxonomy_shape(taxonomy):
    assert list(taxonomy.domains) == list(DOMAINS)
    assert len(taxonomy.leaves()) == 18
    assert set(taxonomy.first_level_parents()) == {"tourist experience", "tourist experience lifecycle management"}


def test_norm_folds_case_and_ampersand():
    assert norm("Management & Operations") == norm("management and  operations")


def test_lookup_full_path_bare_name_and_parent_scope(taxonomy):
    assert taxonomy.lookup("tourist experience > smart facilities") == "Tourist Experience > Smart Facilities"
    assert taxonomy.lookup("Building Block") == "Tourist Experience Lifecycle Management > Building Block"
    assert taxonomy.lookup("Tourist Information Systems") is None


def test_taxonomy_rejects_duplicate_paths():
    d = {"domains": [{"name": TO, "categories": [{"name": "A", "description": "x"},
                                                  {"name": "A", "description": "y"}]},
                     {"name": MK, "categories": []}, {"name": MO, "categories": []}]}
    with pytest.raises(SchemaViolation):
        taxonomy_from_dict(d)


def test_expert_score_range():
    with pytest.raises(ValueError):
        ExpertScore("Marketing", 6)


def test_gold_datasets_cover_every_leaf(taxonomy, gold_a, gold_b):
    assert len(gold_a.entries) == 8 and len(gold_b.entries) == 9
    assert set(taxonomy.leaves()) <= gold_a.covered() | gold_b.covered()


def test_gold_with_unknown_category_rejected(taxonomy, gold_a):
    d = gold_a.to_dict()
    d["entries"][0]["gold"][MK] = ["Influencer Marketing"]
    with pytest.raises(SchemaViolation):
        GoldDataset.from_dict(d).validate(taxonomy)


# ---------------------------------------------------------------- prompts

def test_taxonomy_prompt_lists_every_category_and_is_context_only(taxonomy):
    text = build_taxonomy_prompt(taxonomy)
    for c in taxonomy.categories.values():
        assert c.name in text
    assert text.endswith(CONTEXT_ONLY)
    with pytest.raises(BudgetExceeded):
        build_taxonomy_prompt(taxonomy, budget=100)


def test_shot_layout(taxonomy, shots):
    stt, gold, just = shots[0]
    text = render_shot(taxonomy, stt, gold, just)
    assert text.startswith(EXAMPLE_MARKER) and text.endswith(CONTEXT_ONLY)
    body = text[len(EXAMPLE_MARKER):]
    stt_obj = extract_json_object(body)
    assert stt_obj == {"Solution Name": stt.stt_name, "Description": stt.stt_description}
    answer = json.loads(body[body.index("},") + 2:body.rindex("}") + 1])
    assert answer["Classification"] == [p for d in DOMAINS for p in sorted(gold.get(d, ()))]
    assert answer["Justification"]


def test_fewshot_packing_respects_budget(taxonomy, shots):
    one = build_fewshot_prompts(shots, 15_000, taxonomy)
    assert len(one) == 1
    singles = [render_shot(taxonomy, *s) for s in shots]
    tight = build_fewshot_prompts(shots, max(map(len, singles)), taxonomy)
    assert len(tight) == len(shots)
    with pytest.raises(ShotTooLarge):
        build_fewshot_prompts(shots, 50, taxonomy)


def test_pack_texts_greedy():
    assert pack_texts(["aa", "bb", "cc"], 6) == ["aa\n\nbb", "cc"]
    assert pack_texts([], 10) == []


@pytest.mark.parametrize("size,expected", [(4_000, [3]), (6_000, [2, 1])])
def test_pack_texts_shot_arithmetic(size, expected):
    shots = [c * size for c in "xyz"]
    packed = pack_texts(shots, 15_000)
    assert [p.count(SHOT_SEPARATOR) + 1 for p in packed] == expected


def test_classification_prompt_content(taxonomy):
    stt = make_record("VisitBot", "A chatbot answering visitor questions on site.")
    text = build_classification_prompt(stt, taxonomy)
    assert text.startswith(CLASSIFY_MARKER)
    for d in DOMAINS:
        assert d in text
    assert "1 (highly unlikely) to 5 (highly likely)" in text
    assert "scores of 4 or higher" in text
    assert json.loads(text.split("STT to classify:")[1]) == {"Solution Name": "VisitBot",
                                                             "Description": stt.stt_description}
    with pytest.raises(BudgetExceeded):
        build_classification_prompt(make_record(description="x" * 20_000), taxonomy)


def test_select_categories_examples():
    s = [ExpertScore("a", 5), ExpertScore("b", 4), ExpertScore("c", 2)]
    assert select_categories(s) == {"a", "b"}
    assert select_categories([ExpertScore("a", 3), ExpertScore("b", 3), ExpertScore("c", 1)]) == {"a", "b"}
    with pytest.raises(ValueError):
        select_categories([])


# ---------------------------------------------------------------- parsing

def test_parser_golden_cases(taxonomy, parser_golden):
    contexts: dict = {}
    for case in parser_golden:
        ctx = contexts.setdefault(case["batch"], BatchContext()) if "batch" in case else None
        res = parse_classification_response(case["reply"], taxonomy, ctx, case["id"])
        assert res.validity == case["expected"], (case["id"], res.repairs)


def test_parser_keeps_scores_and_justification(taxonomy):
    reply = json.dumps({TO: ["Smart Facilities"], MK: ["Market Intelligence"], MO: ["Accessibility"],
                        "Justification": "why", "Scores": [{"category": "Smart Facilities", "score": 5}]})
    res = parse_classification_response(reply, taxonomy)
    assert res.justification == "why"
    assert res.scores[0].category.endswith("Smart Facilities") and res.scores[0].score == 5


def test_parser_nested_parent_object(taxonomy):
    reply = json.dumps({TO: {"Tourist Experience": ["Smart Facilities"]}, MK: ["Market Intelligence"],
                        MO: ["Accessibility"]})
    res = parse_classification_response(reply, taxonomy)
    assert res.validity == "ValidRepaired"
    assert res.selections[TO] == ["Tourist Experience > Smart Facilities"]


def test_result_dict_round_trip(taxonomy):
    res = parse_classification_response(json.dumps({TO: ["Building Block"], MK: [], MO: ["Accessibility"]}),
                                        taxonomy, stt_ref="X:p1")
    assert ClassificationResult.from_dict(res.to_dict()) == res


def test_invalid_results_do_not_mark_later_ones_as_repeats(taxonomy):
    ctx = BatchContext()
    bad = json.dumps({TO: ["Made Up"], MK: ["Market Intelligence"], MO: ["Accessibility"]})
    good = json.dumps({TO: ["Building Block"], MK: ["Market Intelligence"], MO: ["Accessibility"]})
    assert parse_classification_response(bad, taxonomy, ctx).validity == "InvalidHallucination"
    assert parse_classification_response(good, taxonomy, ctx).validity == "Valid"


# ---------------------------------------------------------------- batch classification

def test_plan_conversations():
    assert plan_conversations(9, 2, 10) == [8, 1]
    assert plan_conversations(9, 3, 10) == [7, 2]  # taxonomy prompt plus two few-shot prompts
    assert plan_conversations(8, 2, 10) == [8]
    assert plan_conversations(0, 2, 10) == []
    with pytest.raises(BudgetExceeded):
        plan_conversations(3, 10, 10)


def _keyword_gateway(taxonomy, **kw):
    return Gateway(MockResponder(fallback=KeywordClassifier(taxonomy)), **kw)


def test_shared_mode_splits_conversations(taxonomy, gold_b, shots):
    gw = _keyword_gateway(taxonomy)
    results = classify_batch([e.record for e in gold_b.entries], gw, taxonomy, shots)
    assert [r.stt_ref for r in results] == [e.record.record_id for e in gold_b.entries]
    convs = {}
    for cid, _ in gw.sent:
        convs[cid] = convs.get(cid, 0) + 1
    assert sorted(convs.values()) == [3, 10]


def test_isolated_mode_one_stt_per_conversation(taxonomy, gold_a, shots):
    gw = _keyword_gateway(taxonomy)
    stts = [e.record for e in gold_a.entries]
    results = classify_batch(stts, gw, taxonomy, shots, ClassifyPolicy("isolated", workers=4))
    assert [r.stt_ref for r in results] == [s.record_id for s in stts]
    assert len({cid for cid, _ in gw.sent}) == len(stts)


def test_gateway_failure_names_the_stt(taxonomy):
    def boom(conv, text):
        if CLASSIFY_MARKER in text:
            raise EndpointFailure("down")
        return "OK"

    stt = make_record("A", "b")
    with pytest.raises(ClassificationError) as exc:
        classify_batch([stt], Gateway(boom), taxonomy)
    assert exc.value.stt_ref == stt.record_id


def test_repeated_answers_in_a_batch_become_invalid(taxonomy):
    reply = json.dumps({TO: ["Building Block"], MK: ["Market Intelligence"], MO: ["Accessibility"]})
    gw = Gateway(MockResponder([(CLASSIFY_MARKER, reply)], default="OK"))
    stts = [make_record(f"T{i}", "d", page=i) for i in range(3)]
    results = classify_batch(stts, gw, taxonomy)
    assert [r.validity for r in results] == ["Valid", "InvalidRepetition", "InvalidRepetition"]


def test_keyword_classifier_answers_are_valid(taxonomy, gold_a):
    kc = KeywordClassifier(taxonomy)
    for e in gold_a.entries:
        reply = json.dumps(kc.classify(e.record.stt_name, e.record.stt_description))
        assert parse_classification_response(reply, taxonomy).validity == "Valid"
