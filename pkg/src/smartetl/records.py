"""Core record types and JSON-lines helpers."""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

FAMILIES = ("SpanishSTT", "EUPractice")


@dataclass(frozen=True)
class RegionLocation:
    region_name: str
    latitude: float
    longitude: float
    derivation: str = "PhonePrefix"  # PhonePrefix | Explicit

    def __post_init__(self):
        if abs(self.latitude) > 90 or abs(self.longitude) > 180:
            raise ValueError(f"coordinates out of range: {self.latitude}, {self.longitude}")
        if self.derivation not in ("PhonePrefix", "Explicit"):
            raise ValueError(f"unknown derivation {self.derivation!r}")


@dataclass(frozen=True)
class Source:
    catalog_id: str
    first_page: int
    last_page: int


@dataclass
class STTRecord:
    """One extracted Smart Tourism Tool (or, for EU catalogs, one STT-based initiative).

    EU initiatives reuse the same fields: title -> ``stt_name``,
    description -> ``stt_description``, URL -> ``producer_url``,
    location -> ``location`` and images -> ``images``.
    """

    stt_name: str
    stt_description: str
    source: Source
    producer_name: str = ""
    producer_description: str = ""
    producer_logo: str | None = None
    producer_url: str | None = None
    scope: list[str] = field(default_factory=list)
    destination_types: list[str] = field(default_factory=list)
    solution_types: list[str] = field(default_factory=list)
    phone: str | None = None
    email: str | None = None
    region: RegionLocation | None = None
    qr_payloads: list[str] = field(default_factory=list)
    location: str | None = None
    images: list[str] = field(default_factory=list)
    family: str = "SpanishSTT"
    language: str = "en"
    translated_from: str | None = None
    translation_failures: list[str] = field(default_factory=list)

    @property
    def record_id(self) -> str:
        return f"{self.source.catalog_id}:p{self.source.first_page}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["record_id"] = self.record_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "STTRecord":
        d = dict(d)
        d.pop("record_id", None)
        src = d.pop("source")
        region = d.pop("region", None)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown STTRecord fields: {sorted(unknown)}")
        return cls(
            source=Source(**src),
            region=RegionLocation(**region) if region else None,
            **d,
        )


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_jsonl(path, rows: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(canonical_json(row) + "\n")
            n += 1
    return n


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def save_records(path, records: Iterable[STTRecord]) -> int:
    return write_jsonl(path, (r.to_dict() for r in records))


def load_records(path) -> list[STTRecord]:
    return [STTRecord.from_dict(d) for d in read_jsonl(path)]


def load_image(data) -> Image.Image:
    """Open image bytes, a path, a PIL image or a numpy array."""
    if isinstance(data, Image.Image):
        return data
    if isinstance(data, np.ndarray):
        return Image.fromarray(data)
    if isinstance(data, (str, Path)):
        return Image.open(data)
    return Image.open(io.BytesIO(data))


def image_ref(image) -> str:
    """Content reference of an image, stable across PNG/PDF re-encoding.

    Hashes decoded RGB pixels, so the same picture embedded in a PDF and
    read back compares equal to its source.
    """
    im = load_image(image).convert("RGB")
    h = hashlib.sha256()
    h.update(f"{im.width}x{im.height}:".encode())
    h.update(im.tobytes())
    return "img:" + h.hexdigest()[:20]


def png_bytes(image) -> bytes:
    buf = io.BytesIO()
    load_image(image).save(buf, format="PNG")
    return buf.getvalue()
