"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

from __future__ import annotations

import itertools
import json
import random
import time
from pathlib import Path

import pytest

from smartetl.catalog import CatalogManifest, parse_catalog
from smartetl.catalog.extract import glossary_from_catalog
from smartetl.catalog.fixtures import synthetic_haystack
from smartetl.dcterms import map_record
from smartetl.dedup import CatalogSet, TypeAssociationTable, dedup_catalogs
from smartetl.gateway import Gateway, MockResponder, ReplayResponder, Transcript
from smartetl.icons import match_icon
from smartetl.loader import ClientConfig, LoadLedger, OmekaClient, load_plan
from smartetl.metrics import macro_consistency, reference_rows, set_prf
from smartetl.needle import (
    DEFAULT_NEEDLE,
    ProbeConfig,
    always_found,
    always_not_found,
    found_in_second_half,
    run_probe,
)
from smartetl.pipeline import RunConfig, example_config, run
from smartetl.records import load_records, png_bytes, sha256_file
from smartetl.simulate import KeywordClassifier
from smartetl.taxonomy import (
    BatchContext,
    ClassifyPolicy,
    ExpertScore,
    classify_batch,
    parse_classification_response,
    select_categories,
)

from .conftest import make_record

DATA = Path(__file__).parent / "data"


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} [{number}] {detail}", flush=True)
        assert ok, detail
    return emit


def test_1_macro_f1_consistency(report):
    t0 = time.perf_counter()
    rows = reference_rows()
    gaps = [macro_consistency(r) for r in rows]
    elapsed = time.perf_counter() - t0
    ok = len(rows) == 8 and max(gaps) <= 0.02 and elapsed < 1.0
    report(1, ok, f"macro-F1 consistency: {len(rows)} rows, max |mean(domain F1) - total| = "
                  f"{max(gaps):.4f} (tol 0.02), {elapsed:.3f}s")


def _brute_force(pred, gold):
    universe = sorted(set(pred) | set(gold))
    tp = sum(1 for x in universe if x in pred and x in gold)
    fp = sum(1 for x in universe if x in pred and x not in gold)
    fn = sum(1 for x in universe if x not in pred and x in gold)
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def test_2_set_prf_against_counting_oracle(report):
    rng = random.Random(20240601)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        pool = [f"c{i}" for i in range(rng.randint(1, 12))]
        pred = {c for c in pool if rng.random() < 0.4}
        gold = {c for c in pool if rng.random() < 0.4}
        got, want = set_prf(pred, gold), _brute_force(pred, gold)
        mismatches += any(abs(a - b) > 1e-12 for a, b in zip(got, want))
    elapsed = time.perf_counter() - t0
    report(2, mismatches == 0 and elapsed < 5.0,
           f"set_prf vs TP/FP/FN oracle: 200 seeded cases, {mismatches} mismatches, {elapsed:.3f}s")


def test_3_budget_enforcement(report, taxonomy, gold_a, gold_b, shots):
    violations, prompts, conversations = 0, 0, 0
    for ds in (gold_a, gold_b):
        gw = Gateway(MockResponder(fallback=KeywordClassifier(taxonomy)))
        classify_batch([e.record for e in ds.entries], gw, taxonomy, shots, ClassifyPolicy("shared"))
        per: dict = {}
        for cid, text in gw.sent:
            per[cid] = per.get(cid, 0) + 1
            violations += len(text) > 15_000
        violations += sum(1 for n in per.values() if n > 10)
        prompts += len(gw.sent)
        conversations += len(per)
    report(3, violations == 0 and prompts > 0,
           f"budgets on A+B: {prompts} prompts in {conversations} conversations, "
           f"{violations} over 15000 chars or 10 prompts")


def test_4_selection_rule_exhaustive(report):
    wrong = 0
    for combo in itertools.product(range(1, 6), repeat=3):
        scores = [ExpertScore(c, s) for c, s in zip("xyz", combo)]
        oracle = {c for c, s in zip("xyz", combo) if s >= 4} or {c for c, s in zip("xyz", combo) if s == max(combo)}
        wrong += select_categories(scores) != oracle
    report(4, wrong == 0, f"select_categories: 125 score triples, {wrong} disagreements with oracle")


def test_5_parser_golden_file(report, taxonomy, parser_golden):
    contexts: dict = {}
    bad = []
    for case in parser_golden:
        ctx = contexts.setdefault(case["batch"], BatchContext()) if "batch" in case else None
        got = parse_classification_response(case["reply"], taxonomy, ctx, case["id"]).validity
        if got != case["expected"]:
            bad.append(f"{case['id']}: {got} != {case['expected']}")
    report(5, len(parser_golden) == 20 and not bad,
           f"parser golden file: {len(parser_golden)} cases, {len(bad)} wrong {bad[:3]}")


def test_6_needle_probe(report):
    book = synthetic_haystack(120_000)
    t0 = time.perf_counter()
    fail = run_probe(Gateway(always_not_found()), ProbeConfig(book))
    ok_fail = len(fail.trials) == 6
    up = run_probe(Gateway(always_found(DEFAULT_NEEDLE)), ProbeConfig(book, hard_limit=15_000))
    ok_up = up.limits == [10_000 + 500 * k for k in range(11)]
    half = run_probe(Gateway(found_in_second_half(DEFAULT_NEEDLE)), ProbeConfig(book, hard_limit=20_000))
    rates = [half.quartile_error_rate(q) for q in (1, 2, 3, 4)]
    ok_half = rates == [1.0, 1.0, 0.0, 0.0]
    elapsed = time.perf_counter() - t0
    report(6, ok_fail and ok_up and ok_half and elapsed < 5.0,
           f"needle probe: always-fail {len(fail.trials)} trials, escalation {up.limits[0]}..{up.limits[-1]} "
           f"step 500 ({len(up.limits)} limits), second-half quartile errors {rates}, {elapsed:.3f}s")


def test_7_extraction_round_trip(report, corpus, scenario):
    base, paths = corpus
    fields = equal = qr_total = qr_ok = 0
    for entry in paths["catalogs"]:
        manifest = CatalogManifest.load(base / entry["manifest"])
        pdf = (base / entry["pdf"]).read_bytes()
        got = parse_catalog(manifest, pdf)
        want = load_records(base / "expected" / f"{manifest.catalog_id}.jsonl")
        assert len(got) == len(want) == 10
        for g, w in zip(got, want):
            gd, wd = g.to_dict(), w.to_dict()
            for k in wd:
                fields += 1
                equal += gd.get(k) == wd[k]
            for payload in w.qr_payloads:
                qr_total += 1
                qr_ok += payload in g.qr_payloads
    icons = icons_ok = 0
    for cat in scenario.catalogs:
        for vocab, images in cat.icons.items():
            glossary = glossary_from_catalog(cat.manifest, cat.pdf, vocab)
            for label, image in images.items():
                icons += 1
                icons_ok += match_icon(png_bytes(image), glossary, threshold=0.90)[0] == label
    ok = equal == fields and qr_ok == qr_total > 0 and icons_ok == icons > 0
    report(7, ok, f"extraction round trip on 3 catalogs: fields {equal}/{fields}, QR {qr_ok}/{qr_total}, "
                  f"icons {icons_ok}/{icons} at threshold 0.90")


def test_8_dedup_replay(report, scenario):
    gw = Gateway(ReplayResponder(Transcript.load(DATA / "dedup_transcript.jsonl")))
    sets = [CatalogSet(c.manifest.catalog_id, y, c.records) for c, y in zip(scenario.catalogs, scenario.years)]
    survivors, rep = dedup_catalogs(sets, TypeAssociationTable.load(), gw)
    ids = [r.record_id for r in survivors]
    want = {"NameMatch": 4, "LLMJudge": 2, "BundleSplit": 1}
    report(8, rep.counts == want and ids == scenario.expected_survivors,
           f"dedup replay: counts {rep.counts}, survivors match ground truth: {ids == scenario.expected_survivors}")


def test_9_loader_idempotence(report, stub, tmp_path):
    items = [map_record(make_record(f"Tool {i}", catalog="ADESTICV2", page=i + 1)) for i in range(10)]
    cfg = ClientConfig(stub.url, backoff=0.0)
    first = load_plan(items, OmekaClient(cfg), LoadLedger(tmp_path / "ledger.json"))
    stub.clear_log()
    second = load_plan(items, OmekaClient(cfg), LoadLedger(tmp_path / "ledger.json"))
    mutations = len(stub.mutating_requests())
    bad = map_record(make_record("Twin", catalog="ADESTICV2", page=99))
    bad.collection = ["SpanishSTT", "EUPractice"]
    stub.clear_log()
    rejected = load_plan([bad], OmekaClient(cfg), LoadLedger())
    ok = (first.counts == {"Created": 10} and second.counts == {"Skipped": 10} and mutations == 0
          and rejected.counts == {"Rejected": 1} and stub.log == [])
    report(9, ok, f"loader: first {first.counts}, second {second.counts} with {mutations} mutating requests, "
                  f"two-collection item {rejected.counts} client-side")


def _artifact_hashes(run_dir: Path) -> dict:
    rec = json.loads((run_dir / "stages.json").read_text())
    return {stage: sha256_file(run_dir / a["path"]) for stage, a in sorted(rec.items())}


def test_10_pipeline_replay_is_byte_identical(report, corpus, tmp_path):
    base, paths = corpus
    t0 = time.perf_counter()
    record = tmp_path / "record"
    status, _ = run(RunConfig.from_dict(example_config(paths, run_dir=str(record)), base))
    assert status == 0
    hashes = []
    for name in ("replay-1", "replay-2"):
        cfg = example_config(paths, run_dir=str(tmp_path / name), mode="replay",
                             transcripts=str(record / "transcripts"))
        status, _ = run(RunConfig.from_dict(cfg, base))
        assert status == 0
        hashes.append(_artifact_hashes(tmp_path / name))
    elapsed = time.perf_counter() - t0
    ok = hashes[0] == hashes[1] and len(hashes[0]) == 5 and elapsed < 60.0
    report(10, ok, f"pipeline replay: {len(hashes[0])} stage artifacts identical across two runs: "
                   f"{hashes[0] == hashes[1]}, {elapsed:.1f}s")
