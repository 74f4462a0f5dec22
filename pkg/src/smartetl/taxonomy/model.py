"""STT taxonomy, classification results and gold datasets."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .. import data_path
from ..errors import SchemaViolation
from ..records import STTRecord

DOMAINS = ("(Part of) the Touristic Offer", "Marketing", "Management & Operations")
PATH_SEP = " > "
PLACEHOLDER = "…"

VALIDITIES = ("Valid", "ValidRepaired", "InvalidHallucination", "InvalidRepetition", "InvalidFormat")


def norm(text: str) -> str:
    t = text.replace("’", "'").replace("&", " and ")
    t = re.sub(r"\s+", " ", t).strip().strip("\"'.;:").strip()
    return t.casefold()


@dataclass(frozen=True)
class Category:
    domain: str
    name: str
    description: str
    justification: str
    parent: str | None = None
    children: tuple = ()

    @property
    def path(self) -> str:
        return f"{self.parent}{PATH_SEP}{self.name}" if self.parent else self.name


@dataclass
class Taxonomy:
    domains: dict  # domain name -> {"description": str, "categories": [Category] (top level)}
    categories: dict = field(default_factory=dict)  # path -> Category

    def domain_of(self, path: str) -> str:
        return self.categories[path].domain

    def paths(self, domain: str | None = None) -> list[str]:
        return [p for p, c in self.categories.items() if domain is None or c.domain == domain]

    def leaves(self, domain: str | None = None) -> list[str]:
        return [p for p in self.paths(domain) if not self.categories[p].children]

    def first_level_parents(self) -> dict:
        """norm(name) -> Category for top-level categories that own subcategories."""
        return {norm(c.name): c for c in self.categories.values() if c.parent is None and c.children}

    def lookup(self, value: str, domain: str | None = None, parent: str | None = None) -> str | None:
        """Resolve a reply value to a category path.

        Accepts full paths and bare names; a bare name is resolved within
        ``parent``'s children first, then ``domain``, then the whole taxonomy,
        and only if unambiguous at that level.
        """
        key = norm(value)
        for path in self.categories:
            if norm(path) == key:
                return path
        scopes = []
        if parent:
            scopes.append([p for p, c in self.categories.items() if c.parent == parent])
        if domain:
            scopes.append(self.paths(domain))
        scopes.append(list(self.categories))
        for scope in scopes:
            hits = [p for p in scope if norm(self.categories[p].name) == key]
            if len(hits) == 1:
                return hits[0]
        return None


def _parse_category(domain: str, d: dict, parent: str | None, out: dict) -> Category:
    for key in ("name", "justification"):
        if not isinstance(d.get(key), str) or not d[key].strip():
            raise SchemaViolation(f"category in {domain!r} lacks {key!r}")
    if PLACEHOLDER not in d["justification"] and "..." not in d["justification"]:
        raise SchemaViolation(f"justification template of {d['name']!r} has no placeholder")
    subs = d.get("subcategories", [])
    cat = Category(domain, d["name"], d.get("description", ""), d["justification"], parent,
                   tuple(s["name"] for s in subs))
    if cat.path in out or any(norm(p) == norm(cat.path) for p in out):
        raise SchemaViolation(f"duplicate category path {cat.path!r}")
    out[cat.path] = cat
    for s in subs:
        if "subcategories" in s:
            raise SchemaViolation("taxonomy nests at most two levels")
        _parse_category(domain, s, cat.name, out)
    return cat


def taxonomy_from_dict(obj: dict) -> Taxonomy:
    domains = obj.get("domains")
    if not isinstance(domains, list):
        raise SchemaViolation("taxonomy needs a 'domains' list")
    names = [d.get("name") for d in domains]
    if sorted(names) != sorted(DOMAINS) or len(names) != 3:
        raise SchemaViolation(f"taxonomy must have exactly the domains {DOMAINS}, got {names}")
    categories: dict = {}
    out_domains = {}
    for d in sorted(domains, key=lambda d: DOMAINS.index(d["name"])):
        if not d.get("categories"):
            raise SchemaViolation(f"domain {d['name']!r} has no categories")
        tops = [_parse_category(d["name"], c, None, categories) for c in d["categories"]]
        out_domains[d["name"]] = {"description": d.get("description", ""), "categories": tops}
    return Taxonomy(out_domains, categories)


def load_taxonomy(file=None) -> Taxonomy:
    """Load and validate a taxonomy JSON file (the bundled one by default)."""
    path = file if file is not None else data_path("taxonomy.json")
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"taxonomy is not valid JSON: {exc}") from exc
    return taxonomy_from_dict(obj)


@dataclass(frozen=True)
class ExpertScore:
    category: str
    score: int
    explanation: str = ""

    def __post_init__(self):
        if not isinstance(self.score, int) or not 1 <= self.score <= 5:
            raise ValueError(f"score must be an integer in 1..5, got {self.score!r}")


@dataclass
class ClassificationResult:
    stt_ref: str
    selections: dict  # domain -> list of category paths
    validity: str
    justification: str = ""
    scores: list | None = None
    repairs: list = field(default_factory=list)
    raw: str = ""

    @property
    def is_valid(self) -> bool:
        return self.validity in ("Valid", "ValidRepaired")

    def selected_multiset(self) -> tuple:
        return tuple(sorted(p for paths in self.selections.values() for p in paths))

    def reply_json(self) -> str:
        """Canonical reply form; parsing it yields the same selections."""
        return json.dumps({d: list(self.selections.get(d, [])) for d in DOMAINS}, ensure_ascii=False)

    def to_dict(self) -> dict:
        d = {
            "stt_ref": self.stt_ref,
            "selections": {k: list(self.selections.get(k, [])) for k in DOMAINS},
            "validity": self.validity,
            "justification": self.justification,
            "repairs": list(self.repairs),
            "raw": self.raw,
        }
        if self.scores is not None:
            d["scores"] = [s.__dict__ for s in self.scores]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ClassificationResult":
        scores = d.get("scores")
        return cls(
            d["stt_ref"], {k: list(v) for k, v in d["selections"].items()}, d["validity"],
            d.get("justification", ""),
            [ExpertScore(**s) for s in scores] if scores is not None else None,
            list(d.get("repairs", [])), d.get("raw", ""),
        )


@dataclass
class GoldEntry:
    record: STTRecord
    gold: dict  # domain -> set of paths
    justification: dict = field(default_factory=dict)  # path -> filler for the template


@dataclass
class GoldDataset:
    name: str
    entries: list

    def by_ref(self) -> dict:
        return {e.record.record_id: e for e in self.entries}

    def validate(self, taxonomy: Taxonomy) -> None:
        for e in self.entries:
            for domain, paths in e.gold.items():
                if domain not in DOMAINS:
                    raise SchemaViolation(f"unknown domain {domain!r} in gold for {e.record.record_id}")
                for p in paths:
                    if p not in taxonomy.categories or taxonomy.domain_of(p) != domain:
                        raise SchemaViolation(f"gold category {p!r} not in domain {domain!r}")

    def covered(self) -> set:
        return {p for e in self.entries for paths in e.gold.values() for p in paths}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "entries": [
                {"stt": e.record.to_dict(),
                 "gold": {d: sorted(e.gold.get(d, ())) for d in DOMAINS},
                 "justification": e.justification}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GoldDataset":
        return cls(d["name"], [
            GoldEntry(STTRecord.from_dict(e["stt"]),
                      {k: set(v) for k, v in e["gold"].items()},
                      dict(e.get("justification", {})))
            for e in d["entries"]
        ])

    @classmethod
    def load(cls, path, taxonomy: Taxonomy | None = None) -> "GoldDataset":
        with open(path, encoding="utf-8") as fh:
            ds = cls.from_dict(json.load(fh))
        if taxonomy is not None:
            ds.validate(taxonomy)
        return ds
