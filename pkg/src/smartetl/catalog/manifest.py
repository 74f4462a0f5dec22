"""Per-catalog layout manifests.

A manifest tells the extractor where each catalog element lives on an
entry's page(s). Every entry spans ``pages_per_entry`` consecutive pages
starting at ``entries_start``; rules address a page inside the entry by
``page_offset`` and a rectangle in PDF points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ManifestMismatch
from ..records import FAMILIES

# Element universe, with the catalog columns each element is extracted from.
ELEMENTS = {
    "STT's Name": {"SEGITTUR", "ADESTIC"},
    "STT's Description": {"SEGITTUR", "ADESTIC"},
    "Producer's Name": {"SEGITTUR", "ADESTIC"},
    "Producer's Description": {"SEGITTUR", "ADESTIC"},
    "Producer's Logo": {"SEGITTUR", "ADESTIC"},
    "Producer's URL": {"SEGITTUR", "ADESTIC"},
    "Scope of SD application": {"SEGITTUR"},
    "Type of Destination": {"SEGITTUR", "ADESTIC"},
    "Type of Solution": {"SEGITTUR", "ADESTIC"},
    "Producer's Phone number and Email address": {"ADESTIC"},
    "Producer's Address": {"ADESTIC"},
    "QR Code": {"ADESTIC"},
    "STT-based initiative title": {"EU"},
    "STT-based initiative location": {"EU"},
    "STT-based initiative description": {"EU"},
    "STT-based initiative URL": {"EU"},
    "STT-based initiative image(s)": {"EU"},
}

FAMILY_COLUMNS = {"SpanishSTT": {"SEGITTUR", "ADESTIC"}, "EUPractice": {"EU"}}

# Elements that feed the taxonomy classification; EU practice catalogs never carry them.
CLASSIFICATION_SOURCES = {"STT's Name", "STT's Description", "Type of Solution"}

RULE_KINDS = {"text", "text_list", "image", "images", "icons", "qr", "phone_region"}

_FIELD_KINDS = {
    "stt_name": {"text"},
    "stt_description": {"text"},
    "producer_name": {"text"},
    "producer_description": {"text"},
    "producer_logo": {"image"},
    "producer_url": {"text"},
    "scope": {"text_list"},
    "destination_types": {"text_list", "icons"},
    "solution_types": {"text_list", "icons"},
    "phone": {"text"},
    "email": {"text"},
    "region": {"phone_region"},
    "qr_payloads": {"qr"},
    "location": {"text"},
    "images": {"images"},
}


@dataclass(frozen=True)
class ElementRule:
    element: str
    field: str
    kind: str
    region: tuple | None = None
    page_offset: int = 0
    strip_prefix: str = ""
    separator: str = ", "
    vocabulary: str | None = None  # glossary name for icon rules
    required: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "ElementRule":
        d = dict(d)
        if d.get("region") is not None:
            d["region"] = tuple(float(v) for v in d["region"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = {"element": self.element, "field": self.field, "kind": self.kind}
        if self.region is not None:
            d["region"] = list(self.region)
        for name, default in (("page_offset", 0), ("strip_prefix", ""), ("separator", ", "),
                              ("vocabulary", None), ("required", False)):
            if getattr(self, name) != default:
                d[name] = getattr(self, name)
        return d


@dataclass(frozen=True)
class CatalogManifest:
    catalog_id: str
    family: str
    language: str
    element_rules: tuple
    expected_elements: frozenset
    glossary_pages: dict = field(default_factory=dict)  # vocabulary -> page indices
    entries_start: int = 0
    pages_per_entry: int = 1
    edition_year: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ManifestMismatch(f"unknown family {self.family!r}")
        if len(self.language) != 2 or not self.language.isalpha():
            raise ManifestMismatch(f"language must be an ISO-639-1 code, got {self.language!r}")
        if self.pages_per_entry < 1 or self.entries_start < 0:
            raise ManifestMismatch("bad entry paging")
        allowed = FAMILY_COLUMNS[self.family]
        for name in self.expected_elements:
            if name not in ELEMENTS:
                raise ManifestMismatch(f"unknown element {name!r}")
            if not ELEMENTS[name] & allowed:
                raise ManifestMismatch(f"element {name!r} not extracted from {self.family} catalogs")
        if self.family == "EUPractice" and self.expected_elements & CLASSIFICATION_SOURCES:
            raise ManifestMismatch("EU practice manifests must not declare classification-source elements")
        for rule in self.element_rules:
            if rule.element not in self.expected_elements:
                raise ManifestMismatch(f"rule for undeclared element {rule.element!r}")
            if rule.kind not in RULE_KINDS:
                raise ManifestMismatch(f"unknown rule kind {rule.kind!r}")
            if rule.kind not in _FIELD_KINDS.get(rule.field, ()):
                raise ManifestMismatch(f"field {rule.field!r} cannot take a {rule.kind!r} rule")
            if rule.kind != "phone_region" and rule.region is None:
                raise ManifestMismatch(f"rule for {rule.element!r} needs a region")
            if not 0 <= rule.page_offset < self.pages_per_entry:
                raise ManifestMismatch(f"rule for {rule.element!r} points outside the entry pages")
            if rule.kind == "icons" and rule.vocabulary not in self.glossary_pages:
                raise ManifestMismatch(f"icon rule for {rule.element!r} has no glossary")

    @classmethod
    def from_dict(cls, d: dict) -> "CatalogManifest":
        return cls(
            catalog_id=d["catalog_id"],
            family=d["family"],
            language=d["language"],
            element_rules=tuple(ElementRule.from_dict(r) for r in d["element_rules"]),
            expected_elements=frozenset(d["expected_elements"]),
            glossary_pages={k: list(v) for k, v in d.get("glossary_pages", {}).items()},
            entries_start=d.get("entries_start", 0),
            pages_per_entry=d.get("pages_per_entry", 1),
            edition_year=d.get("edition_year", 0),
        )

    def to_dict(self) -> dict:
        return {
            "catalog_id": self.catalog_id,
            "family": self.family,
            "language": self.language,
            "edition_year": self.edition_year,
            "entries_start": self.entries_start,
            "pages_per_entry": self.pages_per_entry,
            "glossary_pages": self.glossary_pages,
            "expected_elements": sorted(self.expected_elements),
            "element_rules": [r.to_dict() for r in self.element_rules],
        }

    @classmethod
    def load(cls, path) -> "CatalogManifest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)
