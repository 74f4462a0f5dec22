"""Cross-catalog duplicate removal.

Three passes: exact (normalised) name matches, solution-type blocking to
find candidate pairs, and an LLM verdict per candidate pair. Bundles (one
record packaging several tools) are dropped in favour of the separate
records.
"""

from __future__ import annotations

import json
import logging
import re
import string
import unicodedata
from dataclasses import dataclass, field

from . import data_path
from .errors import GatewayError, SchemaViolation, UnknownType, UnparseableVerdict
from .records import STTRecord, write_jsonl
from .taxonomy.parsing import extract_json_object

log = logging.getLogger(__name__)

VERDICTS = ("Identical", "Distinct", "BundleSplit")
METHODS = ("NameMatch", "LLMJudge")
_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)


def normalize_name(text: str) -> str:
    t = unicodedata.normalize("NFKC", text or "").casefold()
    t = _PUNCT.sub(" ", t)
    return " ".join(t.split())


def name_match(a: STTRecord, b: STTRecord) -> bool:
    return (normalize_name(a.stt_name) == normalize_name(b.stt_name)
            and normalize_name(a.producer_name) == normalize_name(b.producer_name))


# ----------------------------------------------------------- type associations

def _is_nested(cell) -> bool:
    return isinstance(cell, list) and bool(cell) and all(isinstance(c, dict) for c in cell)


def _names(cell) -> list[str]:
    if isinstance(cell, str):
        return [cell] if cell else []
    if _is_nested(cell):
        return []
    return [c for c in cell if c]


class TypeAssociationTable:
    """Rows map catalog id -> type name, list of names, "" (absent), or a
    list of nested rows for types that have no counterpart."""

    def __init__(self, rows: list, vocabularies: dict | None = None):
        self.rows = rows
        self.vocabularies = {k: list(v) for k, v in (vocabularies or {}).items()}
        self.catalogs = sorted({k for r in rows for k in r})
        self._validate()

    def _validate(self):
        for row, _ in self._all_rows():
            for cat, cell in row.items():
                if not isinstance(cell, (str, list)):
                    raise SchemaViolation(f"cell for {cat!r} must be a string or list")
                vocab = self.vocabularies.get(cat)
                if vocab is None:
                    continue
                for name in _names(cell):
                    if name not in vocab:
                        raise SchemaViolation(f"{name!r} is not in the {cat} vocabulary")

    def _all_rows(self):
        """(row, enclosing row or None) for top-level and nested rows."""
        for row in self.rows:
            yield row, None
            for cell in row.values():
                if _is_nested(cell):
                    for sub in cell:
                        yield sub, row

    def unassociated_rows(self) -> list:
        out = []
        for row, parent in self._all_rows():
            filled = [c for c in row.values() if _names(c)]
            if parent is not None or (len(filled) == 1 and not any(_is_nested(c) for c in row.values())):
                out.append(row)
        return out

    def candidate_types(self, type_name: str, src: str, dst: str) -> list[str]:
        if src in self.vocabularies and type_name not in self.vocabularies[src]:
            raise UnknownType(f"{type_name!r} is not a {src} solution type")
        for row, parent in self._all_rows():
            if type_name not in _names(row.get(src, "")):
                continue
            if src == dst:
                return [type_name]
            cell = row.get(dst, "")
            if _is_nested(cell):
                return _dedupe(n for sub in cell for n in _names(sub.get(dst, "")))
            names = _names(cell)
            if not names and parent is not None:
                names = _names(parent.get(dst, ""))
            if names:
                return names
            return _dedupe(n for r in self.unassociated_rows() for n in _names(r.get(dst, "")))
        raise UnknownType(f"{type_name!r} does not appear in any {src} cell")

    @classmethod
    def from_dict(cls, d: dict) -> "TypeAssociationTable":
        return cls(d["rows"], d.get("vocabularies"))

    @classmethod
    def load(cls, path=None) -> "TypeAssociationTable":
        with open(path or data_path("type_associations.json"), encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _dedupe(names) -> list[str]:
    out = []
    for n in names:
        if n not in out:
            out.append(n)
    return out


def candidate_types(type_name: str, src: str, dst: str, table: TypeAssociationTable) -> list[str]:
    return table.candidate_types(type_name, src, dst)


# ------------------------------------------------------------------- LLM judge

@dataclass
class DedupDecision:
    verdict: str
    justification: str
    method: str
    bundle: str | None = None  # "a" or "b": which side is the bundle

    def __post_init__(self):
        if self.verdict not in VERDICTS or self.method not in METHODS:
            raise ValueError(f"bad decision {self.verdict}/{self.method}")
        if self.verdict == "BundleSplit" and self.method != "LLMJudge":
            raise ValueError("bundle splits come only from the LLM judge")
        if self.method == "LLMJudge" and not self.justification.strip():
            raise ValueError("LLM decisions need a justification")


def default_template() -> str:
    with open(data_path("prompts/dedup.txt"), encoding="utf-8") as fh:
        return fh.read()


def render_judge_prompt(a: STTRecord, b: STTRecord, template: str) -> str:
    return string.Template(template).safe_substitute(
        name_a=a.stt_name, producer_a=a.producer_name, description_a=a.stt_description,
        name_b=b.stt_name, producer_b=b.producer_name, description_b=b.stt_description,
    )


_LEADING = re.compile(r"^\W*(identical|distinct|bundle)\b(?:\s*[:\-]\s*([ab])\b)?", re.IGNORECASE)
_FIELD = re.compile(r"verdict\W{0,5}(identical|distinct|bundle)\b", re.IGNORECASE)
_MAP = {"identical": "Identical", "distinct": "Distinct", "bundle": "BundleSplit"}


def parse_verdict(reply: str) -> DedupDecision:
    obj = extract_json_object(reply or "")
    word = side = None
    justification = ""
    if obj is not None:
        low = {str(k).casefold(): v for k, v in obj.items()}
        v = low.get("verdict")
        if isinstance(v, str):
            m = _LEADING.match(v)
            if m:
                word, side = m.group(1).casefold(), m.group(2)
        b = low.get("bundle")
        if isinstance(b, str) and b.strip().casefold() in ("a", "b"):
            side = b.strip().casefold()
        j = low.get("justification")
        justification = j if isinstance(j, str) else ""
    if word is None:
        m = _LEADING.match(reply or "") or _FIELD.search(reply or "")
        if m is None:
            raise UnparseableVerdict(reply)
        word = m.group(1).casefold()
        if m.re is _LEADING:
            side = side or m.group(2)
    side = side.casefold() if side else None
    return DedupDecision(_MAP[word], justification.strip() or (reply or "").strip(), "LLMJudge",
                         side if word == "bundle" else None)


def judge_duplicate(a: STTRecord, b: STTRecord, llm, prompt_template: str | None = None) -> DedupDecision:
    """One fresh conversation per pair so verdicts do not influence each other."""
    prompt = render_judge_prompt(a, b, prompt_template or default_template())
    conv = llm.open()
    reply = llm.send(conv, prompt)
    decision = parse_verdict(reply)
    if decision.verdict == "BundleSplit" and decision.bundle is None:
        # no side named: the longer description is taken to be the package
        decision.bundle = "a" if len(a.stt_description) >= len(b.stt_description) else "b"
    return decision


# -------------------------------------------------------------- whole catalogs

@dataclass
class CatalogSet:
    catalog_id: str
    year: int
    records: list
    vocabulary: str | None = None  # column of the association table; defaults to catalog_id

    @property
    def column(self) -> str:
        return self.vocabulary or self.catalog_id


@dataclass
class DedupReport:
    counts: dict = field(default_factory=lambda: {"NameMatch": 0, "LLMJudge": 0, "BundleSplit": 0})
    removed: list = field(default_factory=list)
    review: list = field(default_factory=list)
    pairs_judged: int = 0

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "pairs_judged": self.pairs_judged,
                "removed": list(self.removed), "review": list(self.review)}

    def write_review_queue(self, path) -> None:
        write_jsonl(path, self.review)


def _older(x: tuple, y: tuple) -> tuple:
    """Of two (catalog index, CatalogSet, record) entries, the one to drop."""
    if x[1].year != y[1].year:
        return x if x[1].year < y[1].year else y
    return y if x[0] < y[0] else x


def dedup_catalogs(catalogs: list, table: TypeAssociationTable, llm,
                   prompt_template: str | None = None) -> tuple[list, DedupReport]:
    """Returns surviving records (input order) and the report."""
    report = DedupReport()
    entries = [(ci, cs, r) for ci, cs in enumerate(catalogs) for r in cs.records]
    alive = {id(e[2]) for e in entries}

    def remove(entry, method, kept, justification=""):
        alive.discard(id(entry[2]))
        report.counts[method] += 1
        report.removed.append({"record_id": entry[2].record_id, "method": method,
                               "kept": kept, "justification": justification})

    cross = [(x, y) for i, x in enumerate(entries) for y in entries[i + 1:] if x[0] != y[0]]

    for x, y in cross:
        if id(x[2]) in alive and id(y[2]) in alive and name_match(x[2], y[2]):
            drop = _older(x, y)
            keep = y if drop is x else x
            remove(drop, "NameMatch", [keep[2].record_id])

    for x, y in cross:
        if id(x[2]) not in alive or id(y[2]) not in alive:
            continue
        if not _shares_type(x, y, table):
            continue
        report.pairs_judged += 1
        try:
            decision = judge_duplicate(x[2], y[2], llm, prompt_template)
        except UnparseableVerdict as exc:
            report.review.append({"a": x[2].record_id, "b": y[2].record_id, "reply": exc.reply})
            continue
        except GatewayError as exc:
            raise GatewayError(f"judging {x[2].record_id} vs {y[2].record_id}: {exc}") from exc
        if decision.verdict == "Identical":
            drop = _older(x, y)
            keep = y if drop is x else x
            remove(drop, "LLMJudge", [keep[2].record_id], decision.justification)
        elif decision.verdict == "BundleSplit":
            bundle, other = (x, y) if decision.bundle == "a" else (y, x)
            remove(bundle, "BundleSplit", [other[2].record_id], decision.justification)

    survivors = [e[2] for e in entries if id(e[2]) in alive]
    log.info("dedup: %d -> %d records %s", len(entries), len(survivors), report.counts)
    return survivors, report


def _shares_type(x, y, table: TypeAssociationTable) -> bool:
    targets = set()
    for t in x[2].solution_types:
        try:
            targets.update(table.candidate_types(t, x[1].column, y[1].column))
        except UnknownType:
            log.warning("%s: unknown solution type %r", x[2].record_id, t)
    return bool(targets & set(y[2].solution_types))
