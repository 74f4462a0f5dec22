from __future__ import annotations

import csv
import json
import random

import pytest

from smartetl.catalog.fixtures import synthetic_haystack
from smartetl.errors import BookTooShort, EndpointFailure, OutOfRange
from smartetl.gateway import Gateway
from smartetl.needle import (
    DEFAULT_NEEDLE,
    TEXT_SLOT,
    ProbeConfig,
    always_found,
    always_not_found,
    build_haystack,
    found_in_second_half,
    needle_template,
    parse_needle_response,
    quartile_of,
    run_probe,
)


@pytest.fixture(scope="module")
def book():
    return synthetic_haystack(120_000)


def test_template_has_one_slot():
    assert needle_template().count(TEXT_SLOT) == 1


@pytest.mark.parametrize("limit", [10_000, 10_500, 23_000])
def test_prompt_is_exactly_limit_chars(book, limit):
    prompt, pos = build_haystack(book, DEFAULT_NEEDLE, limit, random.Random(1))
    assert len(prompt) == limit
    assert prompt[pos:pos + len(DEFAULT_NEEDLE)] == DEFAULT_NEEDLE
    assert prompt.count(DEFAULT_NEEDLE) == 1


def test_needle_lands_on_sentence_boundary(book):
    prompt, pos = build_haystack(book, DEFAULT_NEEDLE, 12_000, random.Random(7))
    head = needle_template().partition(TEXT_SLOT)[0]
    assert pos == len(head) or prompt[pos - 2:pos] == ". "


def test_same_seed_same_prompt(book):
    a = build_haystack(book, DEFAULT_NEEDLE, 11_000, random.Random(3))
    b = build_haystack(book, DEFAULT_NEEDLE, 11_000, random.Random(3))
    assert a == b


def test_short_book(book):
    with pytest.raises(BookTooShort):
        build_haystack(book[:500], DEFAULT_NEEDLE, 10_000, random.Random(0))


@pytest.mark.parametrize("pos,length,q", [(0, 100, 1), (24, 100, 1), (25, 100, 2), (50, 100, 3),
                                          (75, 100, 4), (99, 100, 4)])
def test_quartile_of(pos, length, q):
    assert quartile_of(pos, length) == q


@pytest.mark.parametrize("pos,length", [(-1, 10), (10, 10), (0, 0)])
def test_quartile_out_of_range(pos, length):
    with pytest.raises(OutOfRange):
        quartile_of(pos, length)


@pytest.mark.parametrize("reply,outcome", [
    (json.dumps({"Needle": DEFAULT_NEEDLE}), "Found"),
    ('Sure! {"needle": "  the LIGHTHOUSE keeper painted every staircase bright orange before the winter storms. "}',
     "Found"),
    (json.dumps({"Needle": "NOT FOUND"}), "NotFound"),
    (json.dumps({"Needle": "The sea was calm."}), "Wrong"),
    ("The needle is about a lighthouse.", "NonCompliantJSON"),
    (json.dumps({"Answer": DEFAULT_NEEDLE}), "NonCompliantJSON"),
])
def test_parse_needle_response(reply, outcome):
    assert parse_needle_response(reply, DEFAULT_NEEDLE) == outcome


def test_consecutive_failures_stop_the_probe(book):
    report = run_probe(Gateway(always_not_found()), ProbeConfig(book))
    assert len(report.trials) == 6 and report.stop_reason == "ConsecutiveErrors"
    assert report.limits == [10_000] * 6


def test_escalation_to_hard_limit(book):
    report = run_probe(Gateway(always_found(DEFAULT_NEEDLE)), ProbeConfig(book, hard_limit=13_000))
    assert report.limits == list(range(10_000, 13_001, 500))
    assert report.stop_reason == "HardLimit" and report.max_found_limit == 13_000


def test_book_exhaustion_stops_the_probe():
    report = run_probe(Gateway(always_found(DEFAULT_NEEDLE)), ProbeConfig(synthetic_haystack(11_500)))
    assert report.stop_reason == "BookExhausted" and report.trials


def test_gateway_errors_count_as_noncompliant(book):
    def down(conv, text):
        raise EndpointFailure("503")

    report = run_probe(Gateway(down), ProbeConfig(book, max_consecutive_errors=2))
    assert [t.outcome for t in report.trials] == ["NonCompliantJSON"] * 2
    assert report.trials[0].error and report.json_compliance_rate == 0.0


def test_second_half_rule_by_quartile(book):
    report = run_probe(Gateway(found_in_second_half(DEFAULT_NEEDLE)), ProbeConfig(book, hard_limit=16_000))
    assert [report.quartile_error_rate(q) for q in (1, 2, 3, 4)] == [1.0, 1.0, 0.0, 0.0]


def test_report_files(book, tmp_path):
    report = run_probe(Gateway(found_in_second_half(DEFAULT_NEEDLE)), ProbeConfig(book, hard_limit=12_000))
    report.write_json(tmp_path / "r.json")
    report.write_csvs(tmp_path / "q.csv", tmp_path / "b.csv")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["stop_reason"] == "HardLimit" and len(d["trials"]) == len(report.trials)
    rows = list(csv.DictReader(open(tmp_path / "q.csv")))
    assert [r["quartile"] for r in rows] == ["1", "2", "3", "4"]
    buckets = list(csv.DictReader(open(tmp_path / "b.csv")))
    assert sum(int(b["trials"]) for b in buckets) == len(report.trials)


def test_config_validation(book):
    with pytest.raises(ValueError):
        ProbeConfig(book, step=0)
    with pytest.raises(ValueError):
        ProbeConfig(book, start_limit=10)
