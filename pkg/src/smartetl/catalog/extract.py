"""Manifest-driven extraction of STT records from PDF catalogs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import pymupdf

from ..errors import BelowThreshold, MalformedPdf, ManifestMismatch
from ..icons import DEFAULT_THRESHOLD, IconGlossary, build_glossary
from ..records import Source, STTRecord, image_ref
from .manifest import CatalogManifest
from .phone import PhonePrefixTable, resolve_phone_region
from .qr import decode_all

log = logging.getLogger(__name__)


@dataclass
class RawElement:
    kind: str  # TextBlock | Image | Icon | QRCode
    page: int
    bbox: tuple
    payload: object  # text, or image bytes

    @property
    def center(self):
        x0, y0, x1, y1 = self.bbox
        return (x0 + x1) / 2, (y0 + y1) / 2


@dataclass
class CatalogExtraction:
    records: list
    report: dict
    glossaries: dict = field(default_factory=dict)
    assets: dict = field(default_factory=dict)  # image ref -> original image bytes


def _open(pdf) -> pymupdf.Document:
    try:
        if isinstance(pdf, (bytes, bytearray)):
            doc = pymupdf.open(stream=bytes(pdf), filetype="pdf")
        else:
            doc = pymupdf.open(pdf, filetype="pdf")
    except Exception as exc:  # pymupdf raises several unrelated types on bad input
        raise MalformedPdf(str(exc)) from exc
    if not doc.is_pdf or doc.page_count == 0:
        raise MalformedPdf("document has no pages")
    return doc


class _PageCache:
    def __init__(self, doc):
        self.doc = doc
        self._words = {}
        self._images = {}
        self._blobs = {}

    def words(self, index: int) -> list[RawElement]:
        if index not in self._words:
            out = []
            for x0, y0, x1, y1, text, block, line, wno in self.doc[index].get_text("words"):
                out.append(RawElement("TextBlock", index, (x0, y0, x1, y1), (block, line, wno, text)))
            self._words[index] = out
        return self._words[index]

    def images(self, index: int) -> list[RawElement]:
        if index not in self._images:
            page = self.doc[index]
            out = []
            for info in page.get_images(full=True):
                xref = info[0]
                if xref not in self._blobs:
                    self._blobs[xref] = self.doc.extract_image(xref)["image"]
                for rect in page.get_image_rects(xref):
                    out.append(RawElement("Image", index, tuple(rect), self._blobs[xref]))
            out.sort(key=_reading_key)
            self._images[index] = out
        return self._images[index]


def _reading_key(el: RawElement):
    return (round(el.bbox[1]), el.bbox[0])


def _inside(el: RawElement, region) -> bool:
    cx, cy = el.center
    x0, y0, x1, y1 = region
    return x0 <= cx <= x1 and y0 <= cy <= y1


def _join_words(words: list[RawElement]) -> str:
    lines: dict = {}
    for w in words:
        lines.setdefault(w.payload[:2], []).append(w)
    ordered = sorted(lines.values(), key=lambda ws: (round(min(w.bbox[1] for w in ws)), min(w.bbox[0] for w in ws)))
    return " ".join(w.payload[3] for ws in ordered for w in sorted(ws, key=lambda w: w.payload[2]))


def _build_glossaries(cache: _PageCache, manifest: CatalogManifest) -> dict:
    glossaries = {}
    for vocab, pages in manifest.glossary_pages.items():
        labeled = []
        for index in pages:
            if not 0 <= index < cache.doc.page_count:
                raise ManifestMismatch(f"glossary page {index} out of range")
            icons = cache.images(index)
            if not icons:
                raise ManifestMismatch(f"glossary page {index} holds no icons")
            words = cache.words(index)
            for icon in icons:
                ix0, iy0, ix1, iy1 = icon.bbox
                label_words = [w for w in words if w.bbox[0] >= ix1 and iy0 <= w.center[1] <= iy1]
                label = _join_words(label_words)
                if not label:
                    raise ManifestMismatch(f"glossary icon on page {index} has no label")
                labeled.append((label, icon.payload))
        glossaries[vocab] = build_glossary(labeled, catalog_id=manifest.catalog_id)
    return glossaries


def extract_catalog(manifest: CatalogManifest, pdf, phone_table: PhonePrefixTable | None = None,
                    icon_threshold: float = DEFAULT_THRESHOLD) -> CatalogExtraction:
    doc = _open(pdf)
    cache = _PageCache(doc)
    phone_table = phone_table or PhonePrefixTable.bundled()
    glossaries = _build_glossaries(cache, manifest)
    n_entries = (doc.page_count - manifest.entries_start) // manifest.pages_per_entry
    if n_entries <= 0:
        raise ManifestMismatch(f"no entry pages after page {manifest.entries_start}")

    records, entry_reports, assets = [], [], {}
    for k in range(n_entries):
        first = manifest.entries_start + k * manifest.pages_per_entry
        last = first + manifest.pages_per_entry - 1
        values: dict = {}
        populated: set = set()
        claimed_words: set = set()
        unmatched: list = []
        for rule in manifest.element_rules:
            if rule.kind == "phone_region":
                continue
            page = first + rule.page_offset
            value = None
            if rule.kind in ("text", "text_list"):
                words = [w for w in cache.words(page) if _inside(w, rule.region)]
                claimed_words.update(id(w) for w in words)
                text = _join_words(words)
                if rule.strip_prefix and text.startswith(rule.strip_prefix):
                    text = text[len(rule.strip_prefix):]
                text = text.strip()
                if text:
                    value = text if rule.kind == "text" else [
                        s.strip() for s in text.split(rule.separator.strip() or rule.separator) if s.strip()
                    ]
            else:
                images = [im for im in cache.images(page) if _inside(im, rule.region)]
                if rule.kind == "image" and images:
                    ref = image_ref(images[0].payload)
                    assets[ref] = images[0].payload
                    value = ref
                elif rule.kind == "images" and images:
                    value = []
                    for im in images:
                        ref = image_ref(im.payload)
                        assets[ref] = im.payload
                        value.append(ref)
                elif rule.kind == "icons" and images:
                    value = []
                    for im in images:
                        try:
                            label, sim = glossaries[rule.vocabulary].best_match(im.payload)
                            if sim < icon_threshold:
                                raise BelowThreshold(label, sim, icon_threshold)
                            value.append(label)
                        except BelowThreshold as exc:
                            unmatched.append({"element": rule.element, "page": page,
                                              "bbox": [round(v, 2) for v in im.bbox],
                                              "best_label": exc.label,
                                              "similarity": round(exc.similarity, 4)})
                    value = value or None
                elif rule.kind == "qr":
                    value = [p for im in images for p in decode_all(im.payload)] or None
            if value is None:
                if rule.required:
                    raise ManifestMismatch(
                        f"{manifest.catalog_id}: rule for {rule.element!r} selects nothing on page {page}")
                continue
            if rule.field in values and isinstance(values[rule.field], list):
                values[rule.field].extend(value)
            else:
                values[rule.field] = value
            populated.add(rule.element)

        for rule in manifest.element_rules:
            if rule.kind == "phone_region":
                region = resolve_phone_region(values.get("phone"), phone_table)
                if region is not None:
                    values[rule.field] = region
                    populated.add(rule.element)

        record = STTRecord(
            stt_name=values.pop("stt_name", ""),
            stt_description=values.pop("stt_description", ""),
            source=Source(manifest.catalog_id, first, last),
            family=manifest.family,
            language=manifest.language,
            **values,
        )
        records.append(record)
        extra = sum(
            1 for p in range(first, last + 1) for w in cache.words(p) if id(w) not in claimed_words
        )
        entry_reports.append({
            "record_id": record.record_id,
            "pages": [first, last],
            "missing": sorted(manifest.expected_elements - populated),
            "unclaimed_words": extra,
            "unmatched_icons": unmatched,
        })

    report = {
        "catalog_id": manifest.catalog_id,
        "page_count": doc.page_count,
        "entries": len(records),
        "glossaries": {k: {"labels": len(g.entries), "descriptors": g.descriptor_count()}
                       for k, g in glossaries.items()},
        "records": entry_reports,
    }
    log.info("extracted %d records from %s", len(records), manifest.catalog_id)
    return CatalogExtraction(records, report, glossaries, assets)


def parse_catalog(manifest: CatalogManifest, pdf, phone_table: PhonePrefixTable | None = None,
                  icon_threshold: float = DEFAULT_THRESHOLD) -> list[STTRecord]:
    """Records of a catalog; see :func:`extract_catalog` for the sidecar report."""
    return extract_catalog(manifest, pdf, phone_table, icon_threshold).records


def glossary_from_catalog(manifest: CatalogManifest, pdf, vocabulary: str) -> IconGlossary:
    doc = _open(pdf)
    return _build_glossaries(_PageCache(doc), manifest)[vocabulary]
