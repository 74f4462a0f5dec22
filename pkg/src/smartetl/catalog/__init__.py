"""Catalog ingest: PDF extraction, QR decoding, phone-prefix regions, fixtures."""

from .extract import CatalogExtraction, RawElement, extract_catalog, parse_catalog
from .manifest import CatalogManifest, ElementRule
from .phone import PhonePrefixTable, resolve_phone_region
from .qr import decode_all, decode_qr, generate_qr

__all__ = [
    "CatalogExtraction", "CatalogManifest", "ElementRule", "PhonePrefixTable", "RawElement",
    "decode_all", "decode_qr", "extract_catalog", "generate_qr", "parse_catalog",
    "resolve_phone_region",
]
