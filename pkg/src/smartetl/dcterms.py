"""Crosswalk of STT records to DCTERMS items, HTML bodies and translation."""

from __future__ import annotations

import copy
import html
import json
import logging
import re
from dataclasses import dataclass, field

from . import data_path
from .errors import MissingRequired, SchemaViolation, TranslatorFailure
from .records import STTRecord

log = logging.getLogger(__name__)

# catalog element -> record fields holding it
ELEMENT_FIELDS = {
    "STT's Name": ("stt_name",),
    "STT's Description": ("stt_description",),
    "Producer's Name": ("producer_name",),
    "Producer's Description": ("producer_description",),
    "Producer's Logo": ("producer_logo",),
    "Producer's URL": ("producer_url",),
    "Scope of SD application": ("scope",),
    "Type of Destination": ("destination_types",),
    "Type of Solution": ("solution_types",),
    "Producer's Phone number and Email address": ("phone", "email"),
    "Producer's Address": ("region",),
    "QR Code": ("qr_payloads",),
    "STT-based initiative title": ("stt_name",),
    "STT-based initiative location": ("location",),
    "STT-based initiative description": ("stt_description",),
    "STT-based initiative URL": ("producer_url",),
    "STT-based initiative image(s)": ("images",),
}
FAMILY_ELEMENTS = {
    "SpanishSTT": [e for e in ELEMENT_FIELDS if not e.startswith("STT-based")],
    "EUPractice": [e for e in ELEMENT_FIELDS if e.startswith("STT-based")],
}
ATTACHMENT_FIELDS = ("producer_logo", "images")
PROSE_FIELDS = ("stt_description", "producer_description", "scope", "destination_types")
BODY_PROPERTY = "Text"
SUBJECT_PROPERTY = "Subject"


# ---------------------------------------------------------------- vocabulary

@dataclass(frozen=True)
class Term:
    name: str
    uri: str | None
    label: str
    definition: str
    extension: bool = False


def load_vocabulary(path=None) -> dict:
    with open(path or data_path("dcterms.json"), encoding="utf-8") as fh:
        return {t["name"]: Term(**t) for t in json.load(fh)["terms"]}


@dataclass
class PropertyMapping:
    families: dict  # family -> [(property, [element, ...])]

    def __post_init__(self):
        for family, rows in self.families.items():
            props = [p for p, _ in rows]
            if "Title" not in props or "Description" not in props:
                raise SchemaViolation(f"mapping for {family} must cover Title and Description")
            for _, sources in rows:
                for s in sources:
                    if s not in ELEMENT_FIELDS:
                        raise SchemaViolation(f"unknown source element {s!r}")

    @classmethod
    def load(cls, path=None) -> "PropertyMapping":
        with open(path or data_path("property_mapping.json"), encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls({f: [(r["property"], list(r["sources"])) for r in rows] for f, rows in raw.items()})


# ---------------------------------------------------------------- items

@dataclass
class DCTermsItem:
    properties: dict  # property -> [(value, is_html)], insertion ordered
    collection: object  # exactly one collection name
    provenance: dict
    attachments: list = field(default_factory=list)

    def values(self, prop: str) -> list[str]:
        return [v for v, _ in self.properties.get(prop, [])]

    def validate(self, vocabulary: dict | None = None) -> None:
        vocabulary = vocabulary or load_vocabulary()
        for prop in self.properties:
            if prop not in vocabulary:
                raise SchemaViolation(f"{prop!r} is not in the DCTERMS vocabulary")
        for prop in ("Title", "Description"):
            if not any(v.strip() for v in self.values(prop)):
                raise MissingRequired(f"item lacks {prop}")
        if not isinstance(self.collection, str) or not self.collection:
            raise SchemaViolation("an item belongs to exactly one collection")

    def to_dict(self) -> dict:
        return {
            "properties": [{"property": p, "values": [{"text": v, "html": h} for v, h in vals]}
                           for p, vals in self.properties.items()],
            "collection": self.collection,
            "attachments": list(self.attachments),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DCTermsItem":
        props = {row["property"]: [(v["text"], bool(v["html"])) for v in row["values"]]
                 for row in d["properties"]}
        return cls(props, d["collection"], d.get("provenance", {}), list(d.get("attachments", [])))


def _element_values(r: STTRecord, element: str) -> list[str]:
    out = []
    for f in ELEMENT_FIELDS[element]:
        v = getattr(r, f)
        if v is None or v == "" or v == []:
            continue
        if f == "region":
            out.append(v.region_name)
        elif isinstance(v, list):
            out.extend(str(x) for x in v)
        else:
            out.append(str(v))
    return out


def _creator(r: STTRecord) -> str:
    lines = [r.producer_name, r.producer_description]
    if r.phone:
        lines.append(f"Tel: {r.phone}")
    if r.email:
        lines.append(f"Email: {r.email}")
    return "\n".join(x for x in lines if x)


def map_record(r: STTRecord, m: PropertyMapping | None = None, collection: str | None = None,
               subjects=(), body_html: bool = True) -> DCTermsItem:
    """DCTERMS item for one record; ``subjects`` are taxonomy paths from classification."""
    m = m or PropertyMapping.load()
    if not r.stt_name.strip():
        raise MissingRequired(f"{r.record_id}: record has no name/title")
    if not r.stt_description.strip():
        raise MissingRequired(f"{r.record_id}: record has no description")
    if r.family not in m.families:
        raise SchemaViolation(f"no property mapping for family {r.family!r}")
    props: dict = {}
    used = set()
    for prop, sources in m.families[r.family]:
        used.update(sources)
        if prop == "Creator":
            text = _creator(r)
            if text:
                props[prop] = [(text, False)]
            continue
        vals = [v for s in sources for v in _element_values(r, s)
                if not any(f in ATTACHMENT_FIELDS for f in ELEMENT_FIELDS[s])]
        if vals:
            props[prop] = [(v, False) for v in vals]
    if subjects:
        props[SUBJECT_PROPERTY] = [(s, False) for s in subjects]
    if body_html:
        props[BODY_PROPERTY] = [(render_html(r), True)]
    attachments = [ref for f in ATTACHMENT_FIELDS for ref in
                   ([getattr(r, f)] if isinstance(getattr(r, f), str) else getattr(r, f) or [])]
    unmapped = {}
    for element in FAMILY_ELEMENTS.get(r.family, []):
        if element in used:
            continue
        vals = _element_values(r, element)
        if vals:
            unmapped[element] = vals
    provenance = {
        "record_id": r.record_id,
        "catalog_id": r.source.catalog_id,
        "pages": [r.source.first_page, r.source.last_page],
        "unmapped": unmapped,
    }
    if r.region is not None:
        provenance["region"] = {"name": r.region.region_name, "latitude": r.region.latitude,
                                "longitude": r.region.longitude, "derivation": r.region.derivation}
    if r.translated_from:
        provenance["translated_from"] = r.translated_from
    return DCTermsItem(props, collection or r.family, provenance, attachments)


# ---------------------------------------------------------------- HTML

_CONTROL = re.compile(r"[\x00-\x1f\x7f]")
_SAFE_SCHEME = re.compile(r"^(https?://|mailto:)", re.IGNORECASE)


def _esc(text: str) -> str:
    return html.escape(_CONTROL.sub(" ", str(text)), quote=True)


def _anchor(target: str, cls: str | None = None) -> str:
    c = f' class="{cls}"' if cls else ""
    if _SAFE_SCHEME.match(target):
        return f'<a{c} href="{_esc(target)}">{_esc(target)}</a>'
    return f"<a{c}>{_esc(target)}</a>"


def render_html(r: STTRecord) -> str:
    parts = ['<article class="stt">', f"<h2>{_esc(r.stt_name)}</h2>"]
    if r.stt_description:
        parts.append(f'<p class="description">{_esc(r.stt_description)}</p>')
    producer = [x for x in (r.producer_name, r.producer_description) if x]
    contact = [f"Tel: {r.phone}"] if r.phone else []
    contact += [f"Email: {r.email}"] if r.email else []
    if producer or contact:
        parts.append('<div class="producer">')
        parts += [f"<p>{_esc(x)}</p>" for x in producer + contact]
        parts.append("</div>")
    links = []
    if r.producer_url:
        links.append(f"<li>{_anchor(r.producer_url)}</li>")
    links += [f"<li>{_anchor(p, 'qr')}</li>" for p in r.qr_payloads]
    if links:
        parts.append('<ul class="links">' + "".join(links) + "</ul>")
    if r.location:
        parts.append(f'<p class="location">Location: {_esc(r.location)}</p>')
    if r.region is not None:
        parts.append(f'<p class="region">Region: {_esc(r.region.region_name)}</p>')
    parts.append("</article>")
    return "\n".join(parts)


# ---------------------------------------------------------------- translation

class IdentityTranslator:
    def __call__(self, text: str, source: str, target: str = "en") -> str:
        return text


class DictionaryTranslator:
    """Whole-word replacement from a phrase table; longest phrases first."""

    def __init__(self, table: dict):
        self.table = dict(table)
        keys = sorted(self.table, key=len, reverse=True)
        self._re = re.compile(r"\b(" + "|".join(re.escape(k) for k in keys) + r")\b") if keys else None

    def __call__(self, text: str, source: str, target: str = "en") -> str:
        if self._re is None:
            return text
        return self._re.sub(lambda m: self.table[m.group(1)], text)

    @classmethod
    def load(cls, path) -> "DictionaryTranslator":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))


def translate_record(r: STTRecord, translator, target: str = "en") -> STTRecord:
    """Prose fields go through ``translator``; names and URLs are kept verbatim."""
    if r.language == target:
        return r
    out = copy.deepcopy(r)
    failures = list(out.translation_failures)
    for f in PROSE_FIELDS:
        value = getattr(out, f)
        try:
            if isinstance(value, list):
                setattr(out, f, [translator(v, r.language, target) for v in value])
            elif value:
                setattr(out, f, translator(value, r.language, target))
        except Exception as exc:  # any translator failure keeps the original text
            failures.append(f)
            log.warning("%s", TranslatorFailure(f"{r.record_id}.{f}: {exc}"))
    out.translated_from = r.language
    out.language = target
    out.translation_failures = failures
    return out
