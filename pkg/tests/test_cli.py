from __future__ import annotations

import csv
import json

import pytest

from smartetl import data_path
from smartetl.cli import main
from smartetl.records import read_jsonl


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-corpus")
    assert main(["fixtures", "--out", str(out)]) == 0
    return out


def test_fixtures_writes_config(fixture_dir):
    cfg = json.loads((fixture_dir / "config.json").read_text())
    assert len(cfg["catalogs"]) == 3
    assert (fixture_dir / cfg["catalogs"][0]["pdf"]).exists()


def test_extract_then_dedup(fixture_dir, tmp_path):
    outs = []
    for cid in ("SEGITTUR2022", "ADESTICV2"):
        out = tmp_path / f"{cid}.jsonl"
        assert main(["extract", "--manifest", str(fixture_dir / "manifests" / f"{cid}.json"),
                     "--pdf", str(fixture_dir / "catalogs" / f"{cid}.pdf"), "--out", str(out),
                     "--assets", str(tmp_path / "assets")]) == 0
        assert len(read_jsonl(out)) == 10
        outs.append(str(out))
    assert any((tmp_path / "assets").iterdir())
    report = tmp_path / "dedup.json"
    rc = main(["dedup", "--records", *outs, "--year", "SEGITTUR2022=2022", "--year", "ADESTICV2=2023",
               "--rules", str(fixture_dir / "mock_rules.json"), "--out", str(tmp_path / "survivors.jsonl"),
               "--report", str(report), "--record", str(tmp_path / "t" / "dedup.jsonl")])
    assert rc == 0
    assert json.loads(report.read_text())["counts"]["NameMatch"] >= 1
    assert (tmp_path / "t" / "dedup.jsonl").exists()


def test_classify_record_then_replay_then_eval(tmp_path):
    gold = str(data_path("gold/A.json"))
    rec = tmp_path / "classify.jsonl"
    assert main(["classify", "--gold", gold, "--out", str(tmp_path / "mock.jsonl"), "--record", str(rec),
                 "--prompts", str(tmp_path / "prompts.jsonl")]) == 0
    assert main(["classify", "--gold", gold, "--mode", "replay", "--transcripts", str(rec),
                 "--out", str(tmp_path / "replay.jsonl")]) == 0
    assert (tmp_path / "mock.jsonl").read_bytes() == (tmp_path / "replay.jsonl").read_bytes()
    out, fig = tmp_path / "eval.json", tmp_path / "eval.png"
    assert main(["eval", "--pred", str(tmp_path / "replay.jsonl"), "--gold", gold, "--out", str(out),
                 "--figure", str(fig)]) == 0
    d = json.loads(out.read_text())
    assert d["dataset"] == "A" and d["counted"] == 8 and 0.0 < d["total_f1"] <= 1.0
    assert fig.stat().st_size > 0


def test_needle_second_half(tmp_path):
    assert main(["needle", "--canned", "second-half", "--hard-limit", "14000", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "quartile_errors.csv")))
    assert [float(r["error_rate"]) for r in rows] == [1.0, 1.0, 0.0, 0.0]
    for name in ("needle_report.json", "bucket_errors.csv", "needle_quartiles.png", "needle_buckets.png"):
        assert (tmp_path / name).exists()


def test_transform_and_dry_run_load(fixture_dir, tmp_path, capsys):
    recs = tmp_path / "r.jsonl"
    main(["extract", "--manifest", str(fixture_dir / "manifests" / "EU2023.json"),
          "--pdf", str(fixture_dir / "catalogs" / "EU2023.pdf"), "--out", str(recs)])
    items = tmp_path / "items.jsonl"
    assert main(["transform", "--records", str(recs), "--out", str(items)]) == 0
    capsys.readouterr()
    assert main(["load", "--items", str(items), "--base-url", "http://127.0.0.1:9",
                 "--ledger", str(tmp_path / "l.json"), "--dry-run"]) == 0
    assert json.loads(capsys.readouterr().out.strip()) == {"WouldCreate": 10}


def test_load_into_stub(fixture_dir, stub, tmp_path):
    recs, items = tmp_path / "r.jsonl", tmp_path / "items.jsonl"
    main(["extract", "--manifest", str(fixture_dir / "manifests" / "EU2023.json"),
          "--pdf", str(fixture_dir / "catalogs" / "EU2023.pdf"), "--out", str(recs)])
    main(["transform", "--records", str(recs), "--out", str(items)])
    args = ["load", "--items", str(items), "--base-url", stub.url, "--ledger", str(tmp_path / "l.json")]
    assert main(args) == 0 and len(stub.items) == 10
    stub.clear_log()
    assert main(args) == 0 and stub.mutating_requests() == []


def test_pipeline_command(fixture_dir, tmp_path, capsys):
    assert main(["pipeline", "--config", str(fixture_dir / "config.json"), "--run-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "transform" in out and (tmp_path / "run_manifest.json").exists()


def test_errors_exit_nonzero(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--bogus"])
    assert exc.value.code == 2
    assert main(["eval", "--pred", str(tmp_path / "nope.jsonl"), "--gold", str(data_path("gold/A.json")),
                 "--out", str(tmp_path / "e.json")]) == 1
