"""Command line entry point: ``smartetl <subcommand> ...``.

Exit status: 0 on success, 1 when a stage or operation fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import data_path, plotting
from .catalog.extract import extract_catalog
from .catalog.fixtures import synthetic_haystack, write_fixture_corpus
from .catalog.manifest import CatalogManifest
from .dcterms import DCTermsItem, DictionaryTranslator, IdentityTranslator, map_record, translate_record
from .dedup import CatalogSet, TypeAssociationTable, dedup_catalogs
from .errors import SmartETLError
from .gateway import (
    DEFAULT_CHAR_BUDGET,
    DEFAULT_PROMPT_CAP,
    EndpointConfig,
    Gateway,
    HttpChatResponder,
    MockResponder,
    ReplayResponder,
    Transcript,
)
from .loader.client import ClientConfig, LoadLedger, OmekaClient, load_plan
from .metrics import aggregate_run, load_results
from .needle import (
    DEFAULT_NEEDLE,
    ProbeConfig,
    always_found,
    always_not_found,
    found_in_second_half,
    run_probe,
)
from .pipeline import RunConfig, example_config
from .pipeline import run as run_pipeline
from .records import STTRecord, read_jsonl, save_records, write_jsonl
from .simulate import KeywordClassifier
from .taxonomy.classify import ClassifyPolicy, classify_batch
from .taxonomy.model import DOMAINS, ClassificationResult, GoldDataset, load_taxonomy

log = logging.getLogger("smartetl")


# ---------------------------------------------------------------- helpers

def _add_gateway_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("mock", "replay", "live"), default="mock")
    p.add_argument("--transcripts", type=Path,
                   help="replay: a transcript file, or a directory holding <command>.jsonl")
    p.add_argument("--rules", type=Path, help="mock: JSON {rules: [{pattern, response}], default}")
    p.add_argument("--endpoint", type=Path, help="live: JSON endpoint config (token via its token_env)")
    p.add_argument("--record", type=Path, help="write the transcript of this run here")
    p.add_argument("--char-budget", type=int, default=DEFAULT_CHAR_BUDGET)
    p.add_argument("--prompt-cap", type=int, default=DEFAULT_PROMPT_CAP)


def _gateway(args, command: str, fallback=None, char_budget="args") -> Gateway:
    transcript = None
    if args.mode == "replay":
        if args.transcripts is None:
            raise SmartETLError("--mode replay needs --transcripts")
        path = args.transcripts / f"{command}.jsonl" if args.transcripts.is_dir() else args.transcripts
        responder = ReplayResponder(Transcript.load(path))
    elif args.mode == "live":
        if args.endpoint is None:
            raise SmartETLError("--mode live needs --endpoint")
        cfg = EndpointConfig.from_dict(json.loads(args.endpoint.read_text(encoding="utf-8")))
        responder = HttpChatResponder(cfg)
        transcript = Transcript(cfg.base_url)
    else:
        rules = json.loads(args.rules.read_text(encoding="utf-8")) if args.rules else {}
        responder = MockResponder.from_json(rules, fallback=fallback)
        transcript = Transcript("mock")
    budget = args.char_budget if char_budget == "args" else char_budget
    return Gateway(responder, char_budget=budget, prompt_cap=args.prompt_cap, transcript=transcript,
                   label=command)


def _save_transcript(args, gw: Gateway) -> None:
    if args.record and gw.transcript is not None:
        args.record.parent.mkdir(parents=True, exist_ok=True)
        gw.transcript.dump(args.record)


def _translator(spec):
    return DictionaryTranslator.load(spec) if spec else IdentityTranslator()


def _dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)


# ---------------------------------------------------------------- subcommands

def cmd_extract(args) -> int:
    manifest = CatalogManifest.load(args.manifest)
    ext = extract_catalog(manifest, args.pdf.read_bytes(), icon_threshold=args.threshold)
    translator = _translator(args.translator)
    records = [translate_record(r, translator) for r in ext.records]
    n = save_records(args.out, records)
    if args.report:
        _dump_json(args.report, ext.report)
    if args.assets:
        args.assets.mkdir(parents=True, exist_ok=True)
        for ref, data in ext.assets.items():
            (args.assets / (ref.replace(":", "_") + ".png")).write_bytes(data)
    print(f"{manifest.catalog_id}: {n} records -> {args.out}")
    return 0


def cmd_dedup(args) -> int:
    records = [STTRecord.from_dict({k: v for k, v in d.items() if k != "catalog"})
               for f in args.records for d in read_jsonl(f)]
    years = dict(kv.split("=", 1) for kv in args.year)
    vocab = dict(kv.split("=", 1) for kv in args.vocabulary)
    groups: dict = {}
    for r in records:
        cid = r.source.catalog_id
        if cid not in groups:
            if cid not in years:
                raise SmartETLError(f"no --year given for catalog {cid}")
            groups[cid] = CatalogSet(cid, int(years[cid]), [], vocab.get(cid))
        groups[cid].records.append(r)
    gw = _gateway(args, "dedup")
    try:
        survivors, report = dedup_catalogs(list(groups.values()), TypeAssociationTable.load(args.table), gw)
    finally:
        _save_transcript(args, gw)
    save_records(args.out, survivors)
    if args.report:
        _dump_json(args.report, report.to_dict())
    if args.review:
        report.write_review_queue(args.review)
    print(f"{len(records)} -> {len(survivors)} records; {report.counts}")
    return 0


def cmd_classify(args) -> int:
    t = load_taxonomy(args.taxonomy)
    if args.gold:
        stts = [e.record for e in GoldDataset.load(args.gold, t).entries]
    else:
        stts = [STTRecord.from_dict({k: v for k, v in d.items() if k != "catalog"})
                for d in read_jsonl(args.records)]
    shots = []
    if not args.no_shots:
        shots_ds = GoldDataset.load(args.shots or data_path("gold/shots.json"), t)
        shots = [(e.record, e.gold, e.justification) for e in shots_ds.entries]
    gw = _gateway(args, "classify", fallback=KeywordClassifier(t))
    policy = ClassifyPolicy(args.conversation, args.prompt_cap, args.char_budget, args.workers)
    try:
        results = classify_batch(stts, gw, t, shots, policy)
    finally:
        _save_transcript(args, gw)
    write_jsonl(args.out, (r.to_dict() for r in results))
    if args.prompts:
        write_jsonl(args.prompts, ({"conversation": c, "prompt": p} for c, p in gw.sent))
    counts: dict = {}
    for r in results:
        counts[r.validity] = counts.get(r.validity, 0) + 1
    print(f"{len(results)} STTs classified -> {args.out}; {counts}")
    return 0


def cmd_needle(args) -> int:
    haystack = args.haystack.read_text(encoding="utf-8") if args.haystack else synthetic_haystack()
    needle = args.needle or DEFAULT_NEEDLE
    canned = {"found": always_found(needle), "not-found": always_not_found(),
              "second-half": found_in_second_half(needle)}[args.canned]
    gw = _gateway(args, "needle", fallback=canned, char_budget=None)
    cfg = ProbeConfig(haystack, needle, args.start, args.step, args.max_errors, args.hard_limit, args.seed,
                      args.bucket)
    try:
        report = run_probe(gw, cfg)
    finally:
        _save_transcript(args, gw)
    args.out.mkdir(parents=True, exist_ok=True)
    report.write_json(args.out / "needle_report.json")
    report.write_csvs(args.out / "quartile_errors.csv", args.out / "bucket_errors.csv")
    plotting.needle_quartiles(report, args.out / "needle_quartiles.png")
    plotting.needle_buckets(report, args.out / "needle_buckets.png")
    print(f"{len(report.trials)} trials, stop: {report.stop_reason}, "
          f"largest limit found: {report.max_found_limit}")
    return 0


def cmd_eval(args) -> int:
    gold = GoldDataset.load(args.gold, load_taxonomy(args.taxonomy))
    refs = set(gold.by_ref())
    results = [r for r in load_results(args.pred) if r.stt_ref in refs]
    missing = refs - {r.stt_ref for r in results}
    if missing:
        log.warning("%d gold STTs have no prediction: %s", len(missing), sorted(missing)[:5])
    report = aggregate_run(results, gold, args.label, gold.name)
    _dump_json(args.out, report.to_dict())
    print(report.table())
    if args.figure:
        plotting.eval_domains([report], args.figure)
    return 0


def cmd_transform(args) -> int:
    subjects = {}
    if args.classifications:
        for d in read_jsonl(args.classifications):
            res = ClassificationResult.from_dict(d)
            if res.is_valid:
                subjects[res.stt_ref] = [p for dom in DOMAINS for p in res.selections.get(dom, [])]
    items = []
    for d in read_jsonl(args.records):
        r = STTRecord.from_dict({k: v for k, v in d.items() if k != "catalog"})
        items.append(map_record(r, collection=args.collection, subjects=subjects.get(r.record_id, ()),
                                body_html=not args.no_html))
    write_jsonl(args.out, (i.to_dict() for i in items))
    print(f"{len(items)} items -> {args.out}")
    return 0


def cmd_load(args) -> int:
    cfg = ClientConfig(args.base_url, api_key_env=args.api_key_env, dry_run=args.dry_run,
                       key_mode=args.key_mode)
    items = [DCTermsItem.from_dict(d) for d in read_jsonl(args.items)]
    assets = {}
    if args.assets:
        for it in items:
            for ref in it.attachments:
                p = args.assets / (ref.replace(":", "_") + ".png")
                if p.exists():
                    assets[ref] = p.read_bytes()
    report = load_plan(items, OmekaClient(cfg, assets=assets), LoadLedger(args.ledger))
    if args.report:
        _dump_json(args.report, report.to_dict())
    print(json.dumps(report.counts))
    return 1 if any(o["action"] in ("Failed", "Rejected") for o in report.outcomes) else 0


def cmd_pipeline(args) -> int:
    overrides = {"run_dir": str(args.run_dir.resolve()) if args.run_dir else None,
                 "stages": args.stages.split(",") if args.stages else None}
    status, manifest = run_pipeline(RunConfig.load(args.config, **overrides))
    for s in manifest["stages"]:
        print(f"{s['stage']:<10} {s['status']:<9} {s['rows']:>5} rows  {s['artifact']}")
    if status:
        print(f"stage {manifest['failed_stage']} failed: {manifest['error']}", file=sys.stderr)
    return status


def cmd_fixtures(args) -> int:
    corpus = write_fixture_corpus(args.out, args.seed)
    _dump_json(args.out / "config.json", example_config(corpus))
    print(f"fixture corpus and config.json written to {args.out}")
    return 0


def cmd_stub_server(args) -> int:
    from .loader.stub import StubServer

    server = StubServer(args.api_key, port=args.port).start()
    print(f"stub collections API at {server.url} (Ctrl-C to stop)", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smartetl", description="Smart Tourism Tool catalog ETL")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract STT records from one catalog PDF")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--pdf", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path)
    p.add_argument("--assets", type=Path, help="directory for extracted images")
    p.add_argument("--translator", type=Path, help="JSON phrase table for non-English catalogs")
    p.add_argument("--threshold", type=float, default=0.90, help="icon match threshold")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("dedup", help="remove cross-catalog duplicates")
    p.add_argument("--records", type=Path, nargs="+", required=True)
    p.add_argument("--year", action="append", default=[], metavar="CATALOG=YEAR", required=True)
    p.add_argument("--vocabulary", action="append", default=[], metavar="CATALOG=COLUMN")
    p.add_argument("--table", type=Path, help="solution-type association table (bundled by default)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path)
    p.add_argument("--review", type=Path, help="JSONL queue of unparseable verdicts")
    _add_gateway_args(p)
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("classify", help="classify STTs against the taxonomy")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--records", type=Path)
    src.add_argument("--gold", type=Path, help="classify the STTs of a gold dataset")
    p.add_argument("--taxonomy", type=Path)
    p.add_argument("--shots", type=Path)
    p.add_argument("--no-shots", action="store_true")
    p.add_argument("--conversation", choices=("shared", "isolated"), default="shared")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--prompts", type=Path, help="write every prompt sent, for audit")
    _add_gateway_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("needle", help="needle-in-a-haystack context probe")
    p.add_argument("--haystack", type=Path, help="plain-text book (synthetic filler by default)")
    p.add_argument("--needle")
    p.add_argument("--start", type=int, default=10_000)
    p.add_argument("--step", type=int, default=500)
    p.add_argument("--max-errors", type=int, default=6)
    p.add_argument("--hard-limit", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bucket", type=int, default=1_000)
    p.add_argument("--canned", choices=("found", "not-found", "second-half"), default="found",
                   help="mock mode: scripted model behaviour")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_gateway_args(p)
    p.set_defaults(func=cmd_needle)

    p = sub.add_parser("eval", help="score classifications against a gold dataset")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gold", type=Path, required=True)
    p.add_argument("--taxonomy", type=Path)
    p.add_argument("--label", default="")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--figure", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transform", help="map records to DCTERMS items")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--classifications", type=Path, help="classification results for dc:subject")
    p.add_argument("--collection")
    p.add_argument("--no-html", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("load", help="upsert DCTERMS items into a collections API")
    p.add_argument("--items", type=Path, required=True)
    p.add_argument("--base-url", required=True)
    p.add_argument("--api-key-env", default="OMEKA_API_KEY")
    p.add_argument("--key-mode", choices=("query", "header"), default="query")
    p.add_argument("--ledger", type=Path, required=True)
    p.add_argument("--assets", type=Path)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--report", type=Path)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("pipeline", help="run the staged pipeline from a JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--run-dir", type=Path)
    p.add_argument("--stages", help="comma-separated subset")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("fixtures", help="write a synthetic catalog corpus and a run config")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("stub-server", help="serve the in-memory collections API")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--api-key", default="stub-key")
    p.set_defaults(func=cmd_stub_server)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SmartETLError, OSError, ValueError) as exc:
        print(f"smartetl {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
