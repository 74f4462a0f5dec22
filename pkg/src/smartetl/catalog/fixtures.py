"""Synthetic catalog PDFs with known contents.

The real catalogs are copyrighted, so tests and demos run on generated
catalogs that follow the same layout semantics: an icon glossary up front,
then one entry per page. Each generated catalog comes with its layout
manifest and the records that were planted in it, so extraction can be
checked field for field.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pymupdf
from PIL import Image, ImageDraw

from ..records import Source, STTRecord, image_ref, png_bytes, save_records
from .manifest import CatalogManifest, ElementRule
from .phone import PhonePrefixTable, resolve_phone_region
from .qr import generate_qr

PAGE_W, PAGE_H = 595, 842
FONT = "helv"

SOLUTION_VOCABULARIES = {
    "SEGITTUR2022": [
        "Efficient Management: Energy",
        "Efficient Management: Water",
        "Efficient Management: Air quality",
        "Efficient Management: Waste",
        "Accessibility",
        "Big Data and Analytics",
        "Mobility",
        "Tourist Information Points",
    ],
    "SEGITTUR2023": [
        "Efficient resource management: water/energy/waste/air quality",
        "Intelligent Signage/Totems/Tourism Signage",
        "Big Data and Analytics",
        "Mobility",
        "Digital Marketing",
    ],
    "ADESTICV1": [
        "Efficient Management: water, air, energy or waste",
        "Accessibility",
        "Data Intelligence",
        "Mobility and Transport",
        "Marketing and Promotion",
    ],
    "ADESTICV2": [
        "Efficient Management: water, air, energy or waste",
        "Accessibility",
        "Data Intelligence",
        "Mobility and Transport",
        "Marketing and Promotion",
    ],
}
DESTINATION_ICONS = ["Culture and Urban", "Nature and Sport", "Niche", "Beach"]
DESTINATION_TEXT = ["Urbano", "Costa", "Interior", "Rural", "Montaña"]
SCOPES = ["governance", "technology", "sustainability", "innovation", "accessibility"]

_EN_WORDS = (
    "platform smart tourism visitors destination data real-time sensors management "
    "app guide experience route museum beach hotel analytics occupancy flows mobile "
    "cloud dashboard energy water waste accessible signage audio interactive booking "
    "loyalty campaign content city heritage nature operators insights"
).split()
_ES_WORDS = (
    "plataforma turismo inteligente visitantes destino datos gestión sensores "
    "aplicación guía experiencia ruta museo playa hotel análisis ocupación flujos "
    "móvil nube panel energía agua residuos accesible señalización interactiva "
    "reservas fidelización campaña contenido ciudad patrimonio naturaleza información"
).split()
_NAME_PARTS = ("Turi", "Smart", "Geo", "Visit", "Data", "Eco", "Flow", "Guia", "Mar", "Sol",
               "Ruta", "Nube", "Hotel", "Info", "Viaje", "Costa")
_CITIES = ("Lisbon", "Porto", "Seville", "Valencia", "Bruges", "Ghent", "Tallinn", "Ljubljana",
           "Krakow", "Bologna", "Lyon", "Turku", "Aarhus", "Graz", "Malaga")


@dataclass
class PlantedCatalog:
    manifest: CatalogManifest
    pdf: bytes
    records: list
    icons: dict = field(default_factory=dict)  # vocabulary -> {label: glossary PIL image}
    assets: dict = field(default_factory=dict)  # image ref -> PNG bytes


# ---------------------------------------------------------------- drawing

def icon_image(label: str, size: int = 48, cells: int = 8) -> Image.Image:
    """Deterministic block-pattern icon for a glossary label."""
    seed = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    grid = rng.random((cells, cells)) < 0.5
    grid[0, :] = grid[-1, :] = grid[:, 0] = grid[:, -1] = False
    base = np.where(grid, 0, 255).astype(np.uint8)
    return Image.fromarray(base).resize((size, size), Image.NEAREST)


def logo_image(seed: int, size: int = 60) -> Image.Image:
    rng = random.Random(seed)
    im = Image.new("RGB", (size, size), tuple(rng.randrange(180, 256) for _ in range(3)))
    draw = ImageDraw.Draw(im)
    for _ in range(3):
        x0, y0 = rng.randrange(0, size // 2), rng.randrange(0, size // 2)
        x1, y1 = x0 + rng.randrange(10, size // 2), y0 + rng.randrange(10, size // 2)
        colour = tuple(rng.randrange(0, 200) for _ in range(3))
        (draw.ellipse if rng.random() < 0.5 else draw.rectangle)([x0, y0, x1, y1], fill=colour)
    return im


def _wrap(text: str, width: float, fontsize: float) -> list[str]:
    words, lines, cur = text.split(" "), [], ""
    for w in words:
        trial = f"{cur} {w}" if cur else w
        if pymupdf.get_text_length(trial, fontname=FONT, fontsize=fontsize) <= width or not cur:
            cur = trial
        else:
            lines.append(cur)
            cur = w
    if cur:
        lines.append(cur)
    return lines


def _text(page, region, text: str, fontsize: float = 9, prefix: str = ""):
    x0, y0, x1, y1 = region
    # measured widths run short for accented glyphs; keep a safety margin
    lines = _wrap(prefix + text, (x1 - x0 - 4) * 0.85, fontsize)
    lead = fontsize * 1.25
    y = y0 + fontsize + 2
    for line in lines:
        if y > y1 - 2:
            raise ValueError(f"text does not fit region {region}: {text[:40]!r}")
        page.insert_text((x0 + 2, y), line, fontname=FONT, fontsize=fontsize)
        y += lead


def _image(page, rect, image: Image.Image):
    page.insert_image(pymupdf.Rect(*rect), stream=png_bytes(image))


# ---------------------------------------------------------------- content

def _sentence(rng: random.Random, words, n: int) -> str:
    s = " ".join(rng.choice(words) for _ in range(n))
    return s[0].upper() + s[1:] + "."


def _paragraph(rng, words, sentences: int) -> str:
    return " ".join(_sentence(rng, words, rng.randint(6, 14)) for _ in range(sentences))


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _phone(rng: random.Random, table: PhonePrefixTable) -> str:
    if rng.random() < 0.25:
        return f"+34 6{rng.randrange(10, 100)} {rng.randrange(100, 1000)} {rng.randrange(100, 1000)}"
    prefix = rng.choice(sorted(p for p in table.entries if p.startswith("9")))
    if len(prefix) == 2:
        return f"+34 {prefix} {rng.randrange(100, 1000)} {rng.randrange(10, 100)} {rng.randrange(10, 100)}"
    return f"+34 {prefix} {rng.randrange(100, 1000)} {rng.randrange(100, 1000)}"


# ---------------------------------------------------------------- layouts

_SPANISH_REGIONS = {
    "name": (40, 30, 555, 64),
    "description": (40, 70, 555, 252),
    "producer_name": (40, 258, 400, 282),
    "producer_description": (40, 285, 400, 402),
    "logo": (420, 255, 555, 405),
    "url": (40, 408, 555, 430),
    "scope": (40, 434, 555, 456),
    "solution": (40, 462, 555, 532),
    "destination": (40, 538, 555, 604),
    "phone": (40, 608, 300, 630),
    "email": (300, 608, 555, 630),
    "qr": (40, 636, 555, 810),
}
_EU_REGIONS = {
    "title": (40, 30, 555, 64),
    "location": (40, 70, 555, 92),
    "description": (40, 96, 555, 300),
    "url": (40, 306, 555, 328),
    "images": (40, 334, 555, 520),
}


def _spanish_manifest(catalog_id, style, language, year, entries_start):
    r = _SPANISH_REGIONS
    rules = [
        ElementRule("STT's Name", "stt_name", "text", r["name"], required=True),
        ElementRule("STT's Description", "stt_description", "text", r["description"], required=True),
        ElementRule("Producer's Name", "producer_name", "text", r["producer_name"]),
        ElementRule("Producer's Description", "producer_description", "text", r["producer_description"]),
        ElementRule("Producer's Logo", "producer_logo", "image", r["logo"]),
        ElementRule("Producer's URL", "producer_url", "text", r["url"]),
        ElementRule("Type of Solution", "solution_types", "icons", r["solution"], vocabulary="solution_types"),
    ]
    glossary = {"solution_types": [1]}
    if style == "SEGITTUR":
        rules += [
            ElementRule("Scope of SD application", "scope", "text_list", r["scope"], strip_prefix="Scope: "),
            ElementRule("Type of Destination", "destination_types", "icons", r["destination"],
                        vocabulary="destination_types"),
        ]
        glossary["destination_types"] = [2]
    else:
        rules += [
            ElementRule("Type of Destination", "destination_types", "text_list", r["destination"],
                        strip_prefix="Destino: ", separator="; "),
            ElementRule("Producer's Phone number and Email address", "phone", "text", r["phone"],
                        strip_prefix="Tel: "),
            ElementRule("Producer's Phone number and Email address", "email", "text", r["email"],
                        strip_prefix="Email: "),
            ElementRule("Producer's Address", "region", "phone_region"),
            ElementRule("QR Code", "qr_payloads", "qr", r["qr"]),
        ]
    return CatalogManifest(
        catalog_id=catalog_id, family="SpanishSTT", language=language,
        element_rules=tuple(rules), expected_elements=frozenset(x.element for x in rules),
        glossary_pages=glossary, entries_start=entries_start, pages_per_entry=1, edition_year=year,
    )


def _eu_manifest(catalog_id, year):
    r = _EU_REGIONS
    rules = (
        ElementRule("STT-based initiative title", "stt_name", "text", r["title"], required=True),
        ElementRule("STT-based initiative location", "location", "text", r["location"],
                    strip_prefix="Location: "),
        ElementRule("STT-based initiative description", "stt_description", "text", r["description"],
                    required=True),
        ElementRule("STT-based initiative URL", "producer_url", "text", r["url"]),
        ElementRule("STT-based initiative image(s)", "images", "images", r["images"]),
    )
    return CatalogManifest(
        catalog_id=catalog_id, family="EUPractice", language="en", element_rules=rules,
        expected_elements=frozenset(x.element for x in rules), glossary_pages={},
        entries_start=1, pages_per_entry=1, edition_year=year,
    )


def _glossary_page(doc, title: str, labels: list[str]):
    page = doc.new_page(width=PAGE_W, height=PAGE_H)
    page.insert_text((40, 40), title, fontname=FONT, fontsize=14)
    icons = {}
    for i, label in enumerate(labels):
        y = 60 + i * 60
        im = icon_image(label, 48)
        icons[label] = im
        _image(page, (50, y, 98, y + 48), im)
        page.insert_text((110, y + 28), label, fontname=FONT, fontsize=10)
    return icons


def spanish_entry_specs(style: str, catalog_id: str, n: int, seed: int,
                        table: PhonePrefixTable) -> list[dict]:
    rng = random.Random(f"{catalog_id}:{seed}")
    language_words = _ES_WORDS if style == "ADESTIC" else _EN_WORDS
    vocab = SOLUTION_VOCABULARIES.get(catalog_id, SOLUTION_VOCABULARIES["SEGITTUR2022"])
    specs, names = [], set()
    while len(specs) < n:
        name = f"{rng.choice(_NAME_PARTS)}{rng.choice(_NAME_PARTS).lower()} {rng.choice(_NAME_PARTS)}"
        if name in names:
            continue
        names.add(name)
        producer = f"{rng.choice(_NAME_PARTS)}{rng.choice(('tech', 'soft', 'lab', 'net'))} S.L."
        spec = {
            "stt_name": name,
            "stt_description": _paragraph(rng, language_words, rng.randint(3, 6)),
            "producer_name": producer,
            "producer_description": _paragraph(rng, language_words, rng.randint(1, 3)),
            "producer_url": f"https://example.org/{_slug(producer)}",
            "solution_types": rng.sample(vocab, rng.randint(1, 3)),
            "logo_seed": rng.randrange(1 << 30),
        }
        if style == "SEGITTUR":
            spec["scope"] = rng.sample(SCOPES, rng.randint(1, 3))
            spec["destination_types"] = rng.sample(DESTINATION_ICONS, rng.randint(1, 2))
        else:
            spec["destination_types"] = rng.sample(DESTINATION_TEXT, rng.randint(1, 2))
            spec["phone"] = _phone(rng, table)
            spec["email"] = f"info@{_slug(name)}.es"
            spec["qr_payloads"] = [f"https://example.org/video/{_slug(name)}"]
        specs.append(spec)
    return specs


def generate_spanish_catalog(style: str, catalog_id: str, n_entries: int = 10, seed: int = 0,
                             edition_year: int = 2023, specs: list[dict] | None = None,
                             table: PhonePrefixTable | None = None) -> PlantedCatalog:
    """SEGITTUR-style (icons for solution and destination types, scope label) or
    ADESTIC-style (Spanish text, destination as text, phone/email, QR code) catalog."""
    if style not in ("SEGITTUR", "ADESTIC"):
        raise ValueError(f"unknown style {style!r}")
    table = table or PhonePrefixTable.bundled()
    language = "es" if style == "ADESTIC" else "en"
    specs = specs if specs is not None else spanish_entry_specs(style, catalog_id, n_entries, seed, table)
    vocab = sorted({t for s in specs for t in s["solution_types"]} |
                   set(SOLUTION_VOCABULARIES.get(catalog_id, [])))

    doc = pymupdf.open()
    cover = doc.new_page(width=PAGE_W, height=PAGE_H)
    cover.insert_text((40, 80), f"{catalog_id} catalogue of smart tourism tools", fontname=FONT, fontsize=18)
    icons = {"solution_types": _glossary_page(doc, "Type of solution", vocab)}
    if style == "SEGITTUR":
        icons["destination_types"] = _glossary_page(doc, "Type of destination", DESTINATION_ICONS)
    entries_start = doc.page_count
    manifest = _spanish_manifest(catalog_id, style, language, edition_year, entries_start)
    r = _SPANISH_REGIONS

    records, assets = [], {}
    for i, s in enumerate(specs):
        page = doc.new_page(width=PAGE_W, height=PAGE_H)
        _text(page, r["name"], s["stt_name"], 16)
        _text(page, r["description"], s["stt_description"], 9)
        _text(page, r["producer_name"], s["producer_name"], 11)
        _text(page, r["producer_description"], s["producer_description"], 9)
        logo = logo_image(s["logo_seed"])
        _image(page, (430, 262, 530, 362), logo)
        assets[image_ref(logo)] = png_bytes(logo)
        _text(page, r["url"], s["producer_url"], 9)
        for j, label in enumerate(s["solution_types"]):
            # entry icons are embedded at a different resolution than the glossary
            _image(page, (44 + j * 50, 468, 84 + j * 50, 508), icon_image(label, 64))
        region = None
        if style == "SEGITTUR":
            _text(page, r["scope"], ", ".join(s["scope"]), 9, prefix="Scope: ")
            for j, label in enumerate(s["destination_types"]):
                _image(page, (44 + j * 50, 544, 84 + j * 50, 584), icon_image(label, 64))
        else:
            _text(page, r["destination"], "; ".join(s["destination_types"]), 9, prefix="Destino: ")
            _text(page, r["phone"], s["phone"], 9, prefix="Tel: ")
            _text(page, r["email"], s["email"], 9, prefix="Email: ")
            for j, payload in enumerate(s["qr_payloads"]):
                _image(page, (44 + j * 120, 642, 154 + j * 120, 752), generate_qr(payload))
            region = resolve_phone_region(s["phone"], table)
        page_index = entries_start + i
        records.append(STTRecord(
            stt_name=s["stt_name"],
            stt_description=s["stt_description"],
            source=Source(catalog_id, page_index, page_index),
            producer_name=s["producer_name"],
            producer_description=s["producer_description"],
            producer_logo=image_ref(logo),
            producer_url=s["producer_url"],
            scope=list(s.get("scope", [])),
            destination_types=list(s["destination_types"]),
            solution_types=list(s["solution_types"]),
            phone=s.get("phone"),
            email=s.get("email"),
            region=region,
            qr_payloads=list(s.get("qr_payloads", [])),
            family="SpanishSTT",
            language=language,
        ))
    pdf = doc.tobytes(garbage=3, deflate=True)
    return PlantedCatalog(manifest, pdf, records, icons, assets)


def generate_eu_catalog(catalog_id: str = "EU2023", n_entries: int = 10, seed: int = 0,
                        edition_year: int = 2023) -> PlantedCatalog:
    rng = random.Random(f"{catalog_id}:{seed}")
    manifest = _eu_manifest(catalog_id, edition_year)
    r = _EU_REGIONS
    doc = pymupdf.open()
    cover = doc.new_page(width=PAGE_W, height=PAGE_H)
    cover.insert_text((40, 80), f"{catalog_id} compendium of smart tourism practices", fontname=FONT, fontsize=18)
    records, assets = [], {}
    for i in range(n_entries):
        page = doc.new_page(width=PAGE_W, height=PAGE_H)
        city = rng.choice(_CITIES)
        title = f"{rng.choice(_NAME_PARTS)} {rng.choice(('Pass', 'Trail', 'Hub', 'Lab', 'Card'))} {city} {i + 1}"
        desc = _paragraph(rng, _EN_WORDS, rng.randint(3, 7))
        url = f"https://example.eu/practice/{_slug(title)}"
        _text(page, r["title"], title, 16)
        _text(page, r["location"], city, 9, prefix="Location: ")
        _text(page, r["description"], desc, 9)
        _text(page, r["url"], url, 9)
        refs = []
        for j in range(rng.randint(1, 2)):
            im = logo_image(rng.randrange(1 << 30), 80)
            _image(page, (44 + j * 170, 340, 204 + j * 170, 500), im)
            refs.append(image_ref(im))
            assets[refs[-1]] = png_bytes(im)
        records.append(STTRecord(
            stt_name=title, stt_description=desc, source=Source(catalog_id, 1 + i, 1 + i),
            producer_url=url, location=city, images=refs, family="EUPractice", language="en",
        ))
    return PlantedCatalog(manifest, doc.tobytes(garbage=3, deflate=True), records, {}, assets)


@dataclass
class DedupScenario:
    """Two overlapping catalogs with planted duplicates and a scripted judge."""

    catalogs: list  # PlantedCatalog, oldest edition first
    years: list
    judge_rules: list  # (regex, reply) pairs for a MockResponder
    default_reply: str
    expected_counts: dict
    expected_survivors: list  # record ids


def _judge_reply(verdict: str, justification: str, bundle: str | None = None) -> str:
    return json.dumps({"verdict": verdict, "bundle": bundle, "justification": justification})


def dedup_scenario(seed: int = 0, table: PhonePrefixTable | None = None) -> DedupScenario:
    """SEGITTUR2022 (2022) and ADESTICV2 (2023) catalogs of 10 entries each.

    Entries 0-3 share name and producer across catalogs, entries 4-5 are the
    same tools under other names, and ADESTIC entry 6 bundles SEGITTUR
    entries 6 and 7.
    """
    table = table or PhonePrefixTable.bundled()
    seg = spanish_entry_specs("SEGITTUR", "SEGITTUR2022", 10, seed, table)
    ade = spanish_entry_specs("ADESTIC", "ADESTICV2", 10, seed, table)
    seg_names = {s["stt_name"] for s in seg}
    for i, s in enumerate(ade):
        if i >= 4 and s["stt_name"] in seg_names:
            s["stt_name"] = f"{s['stt_name']} Pro"
    for i in range(4):
        # same tool re-listed with different casing and spacing
        ade[i]["stt_name"] = "  " + seg[i]["stt_name"].upper()
        ade[i]["producer_name"] = seg[i]["producer_name"].lower()
    ade = [dict(s, stt_name=s["stt_name"].strip()) for s in ade]
    seg[4]["solution_types"], ade[4]["solution_types"] = ["Big Data and Analytics"], ["Data Intelligence"]
    seg[5]["solution_types"], ade[5]["solution_types"] = ["Mobility"], ["Mobility and Transport"]
    seg[6]["solution_types"] = ["Efficient Management: Energy"]
    seg[7]["solution_types"] = ["Accessibility"]
    ade[6]["solution_types"] = ["Efficient Management: water, air, energy or waste", "Accessibility"]
    ade[6]["stt_name"] = f"{seg[6]['stt_name']} + {seg[7]['stt_name']} Suite"
    for i in range(4, 7):
        ade[i]["email"] = f"info@{_slug(ade[i]['stt_name'])}.es"
        ade[i]["qr_payloads"] = [f"https://example.org/video/{_slug(ade[i]['stt_name'])}"]

    old = generate_spanish_catalog("SEGITTUR", "SEGITTUR2022", seed=seed, edition_year=2022, specs=seg, table=table)
    new = generate_spanish_catalog("ADESTIC", "ADESTICV2", seed=seed, edition_year=2023, specs=ade, table=table)

    def pair(i, j):
        return (rf"Name: {re.escape(seg[i]['stt_name'])}\n.*Name: {re.escape(ade[j]['stt_name'])}\n")

    rules = [
        (pair(4, 4), _judge_reply("identical", "Both describe the same data analytics platform.")),
        (pair(5, 5), _judge_reply("identical", "Both describe the same mobility tool.")),
        (pair(6, 6), _judge_reply("bundle", "b packages a together with another tool.", "b")),
        (pair(7, 6), _judge_reply("bundle", "b packages a together with another tool.", "b")),
    ]
    removed = {old.records[i].record_id for i in (0, 1, 2, 3, 4, 5)} | {new.records[6].record_id}
    survivors = [r.record_id for r in old.records + new.records if r.record_id not in removed]
    return DedupScenario(
        [old, new], [2022, 2023], rules,
        _judge_reply("distinct", "The tools serve different purposes."),
        {"NameMatch": 4, "LLMJudge": 2, "BundleSplit": 1}, survivors,
    )


def synthetic_haystack(length: int = 200_000, seed: int = 1105) -> str:
    """Deterministic filler prose for needle-in-a-haystack probes."""
    rng = random.Random(seed)
    words = _EN_WORDS + ["the", "and", "of", "a", "to", "in", "with", "for", "by", "night", "love",
                         "summer", "time", "beauty", "eye", "heart", "world", "shade", "rose"]
    parts, total = [], 0
    while total < length:
        s = _sentence(rng, words, rng.randint(7, 16))
        parts.append(s)
        total += len(s) + 1
    return " ".join(parts)[:length]


# word table for the Spanish fixture prose
ES_EN = {
    "plataforma": "platform", "turismo": "tourism", "inteligente": "smart", "visitantes": "visitors",
    "destino": "destination", "datos": "data", "gestión": "management", "sensores": "sensors",
    "aplicación": "app", "guía": "guide", "experiencia": "experience", "ruta": "route", "museo": "museum",
    "playa": "beach", "hotel": "hotel", "análisis": "analytics", "ocupación": "occupancy",
    "flujos": "flows", "móvil": "mobile", "nube": "cloud", "panel": "dashboard", "energía": "energy",
    "agua": "water", "residuos": "waste", "accesible": "accessible", "señalización": "signage",
    "interactiva": "interactive", "reservas": "booking", "fidelización": "loyalty",
    "campaña": "campaign", "contenido": "content", "ciudad": "city", "patrimonio": "heritage",
    "naturaleza": "nature", "información": "information",
}


def write_fixture_corpus(out_dir, seed: int = 0) -> dict:
    """Write the dedup pair plus an EU catalog, with manifests, planted records,
    scripted judge rules, a translation table and a needle haystack.

    Returns the written paths, relative to ``out_dir``.
    """
    out = Path(out_dir)
    for sub in ("catalogs", "manifests", "expected"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    scenario = dedup_scenario(seed)
    eu = generate_eu_catalog("EU2023", seed=seed)
    catalogs = []
    for cat in scenario.catalogs + [eu]:
        cid = cat.manifest.catalog_id
        (out / "catalogs" / f"{cid}.pdf").write_bytes(cat.pdf)
        cat.manifest.dump(out / "manifests" / f"{cid}.json")
        save_records(out / "expected" / f"{cid}.jsonl", cat.records)
        catalogs.append({"manifest": f"manifests/{cid}.json", "pdf": f"catalogs/{cid}.pdf"})
    rules = [{"pattern": p, "response": r} for p, r in scenario.judge_rules]
    # any other judge prompt gets the scripted "distinct"; classification falls through
    rules.append({"pattern": r"^You compare two Smart Tourism Tools", "response": scenario.default_reply})
    files = {
        "mock_rules.json": {"rules": rules},
        "translations.json": ES_EN,
        "expected/dedup.json": {"counts": scenario.expected_counts, "survivors": scenario.expected_survivors},
    }
    for name, obj in files.items():
        with open(out / name, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, ensure_ascii=False, indent=2)
    (out / "haystack.txt").write_text(synthetic_haystack(seed=1105 + seed), encoding="utf-8")
    return {"catalogs": catalogs, "mock_rules": "mock_rules.json", "translations": "translations.json",
            "haystack": "haystack.txt", "expected_dedup": "expected/dedup.json"}


__all__ = [
    "ES_EN", "SOLUTION_VOCABULARIES", "DedupScenario", "PlantedCatalog", "dedup_scenario",
    "generate_eu_catalog", "generate_spanish_catalog", "icon_image", "logo_image", "synthetic_haystack",
    "write_fixture_corpus",
]
