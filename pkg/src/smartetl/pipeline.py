"""Resumable extract -> dedup -> classify -> evaluate -> transform -> load runs.

A run is described by one JSON config (paths relative to the config file).
Each stage writes a JSON-lines artifact named by its content hash under
``<run_dir>/artifacts`` and records it in ``<run_dir>/stages.json`` with a
key over its inputs. On rerun a stage is skipped when its key is unchanged,
its artifact still hashes to the recorded value and no upstream stage was
re-executed in this run.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import data_path, plotting
from .catalog.extract import extract_catalog
from .catalog.manifest import CatalogManifest
from .dcterms import (
    DCTermsItem,
    DictionaryTranslator,
    IdentityTranslator,
    PropertyMapping,
    map_record,
    translate_record,
)
from .dedup import CatalogSet, TypeAssociationTable, dedup_catalogs
from .errors import SmartETLError, StageFailure
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
from .metrics import aggregate_run
from .records import STTRecord, canonical_json, read_jsonl, sha256_file, sha256_text, write_jsonl
from .simulate import KeywordClassifier
from .taxonomy.classify import ClassifyPolicy, classify_batch
from .taxonomy.model import DOMAINS, ClassificationResult, GoldDataset, load_taxonomy

log = logging.getLogger(__name__)

STAGES = ("extract", "dedup", "classify", "evaluate", "transform", "load")
UPSTREAM = {
    "extract": (),
    "dedup": ("extract",),
    "classify": ("dedup",),
    "evaluate": ("classify",),
    "transform": ("dedup", "classify"),
    "load": ("transform",),
}
GATEWAY_MODES = ("live", "replay", "mock")
CATALOG_TARGET = "catalog"  # classification rows for deduplicated catalog records


@dataclass
class CatalogInput:
    manifest: Path
    pdf: Path
    vocabulary: str | None = None  # association-table column; defaults to the catalog id


@dataclass
class RunConfig:
    run_dir: Path
    catalogs: list
    stages: tuple = STAGES
    taxonomy: Path | None = None
    gold: dict = field(default_factory=dict)  # label -> path; empty means the bundled A and B
    shots: Path | None = None
    gateway_mode: str = "mock"
    transcripts: Path | None = None  # replay: directory of <stage>.jsonl recordings
    mock_rules: Path | None = None
    endpoint: dict | None = None
    char_budget: int = DEFAULT_CHAR_BUDGET
    prompt_cap: int = DEFAULT_PROMPT_CAP
    conversation_mode: str = "shared"
    dedup_table: Path | None = None
    translator: Path | None = None  # phrase table; None keeps text as is
    loader: dict | None = None
    seed: int = 0

    def __post_init__(self):
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ValueError(f"unknown stages {unknown}")
        self.stages = tuple(s for s in STAGES if s in self.stages)
        if self.gateway_mode not in GATEWAY_MODES:
            raise ValueError(f"gateway mode must be one of {GATEWAY_MODES}")
        if self.gateway_mode == "replay" and self.transcripts is None:
            raise ValueError("replay mode needs a transcripts directory")
        if self.gateway_mode == "live" and not self.endpoint:
            raise ValueError("live mode needs an endpoint")
        if self.char_budget <= 0 or self.prompt_cap <= 0:
            raise ValueError("budgets must be positive")
        if "load" in self.stages and not self.loader:
            raise ValueError("the load stage needs a loader section")

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "RunConfig":
        d = dict(d)

        def path(v):
            return None if v is None else (base / v)

        gw = d.pop("gateway", {}) or {}
        budgets = d.pop("budgets", {}) or {}
        cfg = cls(
            run_dir=path(d.pop("run_dir", "run")),
            catalogs=[CatalogInput(path(c["manifest"]), path(c["pdf"]), c.get("vocabulary"))
                      for c in d.pop("catalogs")],
            stages=tuple(d.pop("stages", STAGES)),
            taxonomy=path(d.pop("taxonomy", None)),
            gold={k: path(v) for k, v in (d.pop("gold", None) or {}).items()},
            shots=path(d.pop("shots", None)),
            gateway_mode=gw.get("mode", "mock"),
            transcripts=path(gw.get("transcripts")),
            mock_rules=path(gw.get("mock_rules")),
            endpoint=gw.get("endpoint"),
            char_budget=budgets.get("char_budget", DEFAULT_CHAR_BUDGET),
            prompt_cap=budgets.get("prompt_cap", DEFAULT_PROMPT_CAP),
            conversation_mode=d.pop("conversation_mode", "shared"),
            dedup_table=path(d.pop("dedup_table", None)),
            translator=path(d.pop("translator", None)),
            loader=d.pop("loader", None),
            seed=int(d.pop("seed", 0)),
        )
        if d:
            raise ValueError(f"unknown config keys: {sorted(d)}")
        return cfg

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d, path.parent)


def example_config(corpus: dict, run_dir: str = "run", mode: str = "mock", transcripts: str | None = None) -> dict:
    """Config for a corpus written by :func:`write_fixture_corpus` (paths relative to it)."""
    gateway = {"mode": mode, "mock_rules": corpus["mock_rules"]}
    if transcripts:
        gateway["transcripts"] = transcripts
    return {
        "run_dir": run_dir,
        "seed": 0,
        "stages": list(STAGES[:-1]),
        "catalogs": corpus["catalogs"],
        "translator": corpus["translations"],
        "gateway": gateway,
        "budgets": {"char_budget": DEFAULT_CHAR_BUDGET, "prompt_cap": DEFAULT_PROMPT_CAP},
        "loader": {"base_url": "http://127.0.0.1:8080", "api_key_env": "OMEKA_API_KEY",
                   "ledger": "load_ledger.json"},
    }


def _file_hash(path) -> str | None:
    return sha256_file(path) if path is not None else None


def _bundled(name: str) -> str:
    return sha256_text(data_path(name).read_text(encoding="utf-8"))


@dataclass
class StageArtifact:
    stage: str
    path: str  # relative to the run directory
    hash: str
    upstream: dict
    key: str
    rows: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class Pipeline:
    def __init__(self, config: RunConfig):
        self.cfg = config
        self.run_dir = Path(config.run_dir)
        self.taxonomy = load_taxonomy(config.taxonomy)
        self._stages_path = self.run_dir / "stages.json"

    # ------------------------------------------------------------ bookkeeping
    def _recorded(self) -> dict:
        if not self._stages_path.exists():
            return {}
        with open(self._stages_path, encoding="utf-8") as fh:
            return {k: StageArtifact(**v) for k, v in json.load(fh).items()}

    def _save_recorded(self, rec: dict) -> None:
        with open(self._stages_path, "w", encoding="utf-8") as fh:
            json.dump({k: v.to_dict() for k, v in rec.items()}, fh, indent=2, sort_keys=True)

    def _golds(self) -> dict:
        paths = self.cfg.gold or {k: data_path(f"gold/{k}.json") for k in ("A", "B")}
        return {k: GoldDataset.load(p, self.taxonomy) for k, p in sorted(paths.items())}

    def _shots(self) -> list:
        ds = GoldDataset.load(self.cfg.shots or data_path("gold/shots.json"), self.taxonomy)
        return [(e.record, e.gold, e.justification) for e in ds.entries]

    def _stage_inputs(self, stage: str) -> dict:
        """Everything besides upstream artifacts that a stage's output depends on."""
        c = self.cfg
        gw = {"mode": c.gateway_mode, "rules": _file_hash(c.mock_rules),
              "endpoint": c.endpoint if c.gateway_mode == "live" else None}
        if c.gateway_mode == "replay":
            p = Path(c.transcripts) / f"{stage}.jsonl"
            gw["transcript"] = _file_hash(p) if p.exists() else None
        if stage == "extract":
            return {"catalogs": [[sha256_file(x.manifest), sha256_file(x.pdf), x.vocabulary] for x in c.catalogs],
                    "translator": _file_hash(c.translator)}
        if stage == "dedup":
            return {"table": _file_hash(c.dedup_table) or _bundled("type_associations.json"),
                    "template": _bundled("prompts/dedup.txt"), "gateway": gw,
                    "vocabularies": [x.vocabulary for x in c.catalogs]}
        if stage == "classify":
            return {"taxonomy": _file_hash(c.taxonomy) or _bundled("taxonomy.json"),
                    "gold": {k: _file_hash(v) for k, v in sorted(c.gold.items())},
                    "shots": _file_hash(c.shots), "gateway": gw, "budgets": [c.char_budget, c.prompt_cap],
                    "mode": c.conversation_mode}
        if stage == "evaluate":
            return {"gold": {k: _file_hash(v) for k, v in sorted(c.gold.items())}}
        if stage == "transform":
            return {"mapping": _bundled("property_mapping.json")}
        return {"loader": c.loader}

    # ------------------------------------------------------------ gateways
    def _gateway(self, stage: str) -> Gateway:
        c = self.cfg
        transcript = None
        if c.gateway_mode == "replay":
            responder = ReplayResponder(Transcript.load(Path(c.transcripts) / f"{stage}.jsonl"))
        elif c.gateway_mode == "mock":
            rules = {}
            if c.mock_rules is not None:
                with open(c.mock_rules, encoding="utf-8") as fh:
                    rules = json.load(fh)
            responder = MockResponder.from_json(rules, fallback=KeywordClassifier(self.taxonomy))
            transcript = Transcript("mock")
        else:
            ep = EndpointConfig.from_dict(c.endpoint)
            responder = HttpChatResponder(ep)
            transcript = Transcript(ep.base_url)
        return Gateway(responder, char_budget=c.char_budget, prompt_cap=c.prompt_cap,
                       transcript=transcript, label=stage)

    def _audit(self, stage: str, gw: Gateway) -> None:
        """Keep every prompt sent, and in mock/live mode the transcript for later replay."""
        (self.run_dir / "prompts").mkdir(parents=True, exist_ok=True)
        write_jsonl(self.run_dir / "prompts" / f"{stage}.jsonl",
                    ({"conversation": cid, "prompt": text} for cid, text in gw.sent))
        if gw.transcript is not None:
            (self.run_dir / "transcripts").mkdir(parents=True, exist_ok=True)
            gw.transcript.dump(self.run_dir / "transcripts" / f"{stage}.jsonl")

    def _report(self, name: str, obj) -> None:
        (self.run_dir / "reports").mkdir(parents=True, exist_ok=True)
        with open(self.run_dir / "reports" / name, "w", encoding="utf-8") as fh:
            if isinstance(obj, str):
                fh.write(obj)
            else:
                json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=True)

    # ------------------------------------------------------------ stages
    def _extract(self, inputs: dict) -> tuple[list, dict]:
        translator = DictionaryTranslator.load(self.cfg.translator) if self.cfg.translator else IdentityTranslator()
        rows, reports = [], []
        assets_dir = self.run_dir / "assets"
        assets_dir.mkdir(parents=True, exist_ok=True)
        for c in self.cfg.catalogs:
            manifest = CatalogManifest.load(c.manifest)
            ext = extract_catalog(manifest, Path(c.pdf).read_bytes())
            reports.append(ext.report)
            for ref, data in sorted(ext.assets.items()):
                (assets_dir / _asset_name(ref)).write_bytes(data)
            for r in ext.records:
                d = translate_record(r, translator).to_dict()
                # catalog edition and association-table column travel with each record
                d["catalog"] = {"year": manifest.edition_year, "vocabulary": c.vocabulary or manifest.catalog_id}
                rows.append(d)
        self._report("extract.json", reports)
        return rows, {"records": len(rows)}

    def _dedup(self, inputs: dict) -> tuple[list, dict]:
        groups: dict = {}
        for d in inputs["extract"]:
            d = dict(d)
            meta = d.pop("catalog")
            r = STTRecord.from_dict(d)
            cid = r.source.catalog_id
            if cid not in groups:
                groups[cid] = CatalogSet(cid, meta["year"], [], meta["vocabulary"])
            groups[cid].records.append(r)
        table = TypeAssociationTable.load(self.cfg.dedup_table)
        gw = self._gateway("dedup")
        try:
            survivors, report = dedup_catalogs(list(groups.values()), table, gw)
        finally:
            self._audit("dedup", gw)
        self._report("dedup.json", report.to_dict())
        report.write_review_queue(self.run_dir / "reports" / "dedup_review.jsonl")
        return [r.to_dict() for r in survivors], dict(report.counts, survivors=len(survivors))

    def _classify(self, inputs: dict) -> tuple[list, dict]:
        golds = self._golds()
        shots = self._shots()
        policy = ClassifyPolicy(self.cfg.conversation_mode, self.cfg.prompt_cap, self.cfg.char_budget)
        targets = [(label, [e.record for e in ds.entries]) for label, ds in golds.items()]
        catalog = [STTRecord.from_dict(d) for d in inputs["dedup"]]
        targets.append((CATALOG_TARGET, [r for r in catalog if r.family == "SpanishSTT"]))
        gw = self._gateway("classify")
        rows, counts = [], {}
        try:
            for label, stts in targets:
                for res in classify_batch(stts, gw, self.taxonomy, shots, policy):
                    rows.append(dict(res.to_dict(), target=label))
                    counts[res.validity] = counts.get(res.validity, 0) + 1
        finally:
            self._audit("classify", gw)
        return rows, dict(sorted(counts.items()))

    def _evaluate(self, inputs: dict) -> tuple[list, dict]:
        reports = []
        for label, ds in self._golds().items():
            results = [ClassificationResult.from_dict(d) for d in inputs["classify"] if d["target"] == label]
            reports.append(aggregate_run(results, ds, f"seed {self.cfg.seed}", label))
        self._report("eval.txt", "\n\n".join(r.table() for r in reports) + "\n")
        plotting.eval_domains(reports, self.run_dir / "reports" / "eval.png")
        return [r.to_dict() for r in reports], {r.dataset_label: round(r.total_f1, 4) for r in reports}

    def _transform(self, inputs: dict) -> tuple[list, dict]:
        mapping = PropertyMapping.load()
        subjects = {}
        for d in inputs["classify"]:
            if d["target"] == CATALOG_TARGET:
                res = ClassificationResult.from_dict(d)
                if res.is_valid:
                    subjects[res.stt_ref] = [p for dom in DOMAINS for p in res.selections.get(dom, [])]
        rows = []
        for d in inputs["dedup"]:
            r = STTRecord.from_dict(d)
            rows.append(map_record(r, mapping, subjects=subjects.get(r.record_id, ())).to_dict())
        return rows, {"items": len(rows), "with_subject": sum(1 for d in inputs["dedup"]
                                                              if STTRecord.from_dict(d).record_id in subjects)}

    def _load(self, inputs: dict) -> tuple[list, dict]:
        lc = dict(self.cfg.loader)
        ledger = LoadLedger(self.run_dir / lc.pop("ledger", "load_ledger.json"))
        assets_dir = self.run_dir / "assets"
        items = [DCTermsItem.from_dict(d) for d in inputs["transform"]]
        assets = {ref: (assets_dir / _asset_name(ref)).read_bytes()
                  for it in items for ref in it.attachments if (assets_dir / _asset_name(ref)).exists()}
        client = OmekaClient(ClientConfig.from_dict(lc), assets=assets)
        report = load_plan(items, client, ledger)
        self._report("load.json", report.to_dict())
        bad = [o for o in report.outcomes if o["action"] in ("Failed", "Rejected")]
        if bad:
            raise SmartETLError(f"{len(bad)} item(s) not loaded, first: {bad[0]['record_id']}: {bad[0]['error']}")
        return report.outcomes, report.counts

    # ------------------------------------------------------------ driver
    def run(self) -> tuple[int, dict]:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / "artifacts").mkdir(exist_ok=True)
        recorded = self._recorded()
        executed: set = set()
        manifest = {"seed": self.cfg.seed, "gateway_mode": self.cfg.gateway_mode, "status": "ok",
                    "failed_stage": None, "error": None, "stages": []}
        status = 0
        for stage in self.cfg.stages:
            t0 = time.perf_counter()
            try:
                ups = {}
                for u in UPSTREAM[stage]:
                    art = recorded.get(u)
                    if art is None or not (self.run_dir / art.path).exists():
                        raise SmartETLError(f"upstream stage {u!r} has no artifact; run it first")
                    ups[u] = art
                key = sha256_text(canonical_json({
                    "stage": stage, "seed": self.cfg.seed, "inputs": self._stage_inputs(stage),
                    "upstream": {u: a.hash for u, a in ups.items()},
                }))
                prev = recorded.get(stage)
                fresh = (prev is not None and prev.key == key and not executed & set(ups)
                         and (self.run_dir / prev.path).exists()
                         and sha256_file(self.run_dir / prev.path) == prev.hash)
                if fresh:
                    log.info("%s: up to date, skipped", stage)
                    manifest["stages"].append({"stage": stage, "status": "skipped", "artifact": prev.path,
                                               "hash": prev.hash, "rows": prev.rows, "seconds": 0.0})
                    continue
                for u in ups:
                    if sha256_file(self.run_dir / ups[u].path) != ups[u].hash:
                        raise SmartETLError(f"upstream artifact of {u!r} changed on disk; rerun {u!r}")
                inputs = {u: read_jsonl(self.run_dir / a.path) for u, a in ups.items()}
                rows, counts = getattr(self, f"_{stage}")(inputs)
                art = self._write_artifact(stage, rows, ups, key)
            except (SmartETLError, OSError, ValueError, KeyError) as exc:
                failure = StageFailure(stage, exc)
                log.error("%s", failure)
                manifest.update(status="failed", failed_stage=stage, error=str(failure))
                status = 1
                break
            recorded[stage] = art
            executed.add(stage)
            self._save_recorded(recorded)
            manifest["stages"].append({"stage": stage, "status": "executed", "artifact": art.path,
                                       "hash": art.hash, "rows": art.rows, "counts": counts,
                                       "seconds": round(time.perf_counter() - t0, 3)})
            log.info("%s: %d rows -> %s", stage, art.rows, art.path)
        with open(self.run_dir / "run_manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
        return status, manifest

    def _write_artifact(self, stage: str, rows: list, ups: dict, key: str) -> StageArtifact:
        text = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)
        digest = sha256_text(text)
        rel = f"artifacts/{stage}-{digest[:16]}.jsonl"
        path = self.run_dir / rel
        if not path.exists() or sha256_file(path) != digest:
            # never rewrite in place: a fresh name per content
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return StageArtifact(stage, rel, digest, {u: a.hash for u, a in ups.items()}, key, len(rows))


def _asset_name(ref: str) -> str:
    return ref.replace(":", "_") + ".png"


def run(config: RunConfig) -> tuple[int, dict]:
    return Pipeline(config).run()
