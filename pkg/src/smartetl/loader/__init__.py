"""Loading DCTERMS items into an Omeka-style collections API."""

from .client import (
    ClientConfig,
    LoadLedger,
    LoadReport,
    OmekaClient,
    check_item,
    fingerprint,
    load_plan,
    payload_hash,
    wire_payload,
)
from .stub import StubServer, wire_errors

__all__ = [
    "ClientConfig", "LoadLedger", "LoadReport", "OmekaClient", "StubServer", "check_item",
    "fingerprint", "load_plan", "payload_hash", "wire_errors", "wire_payload",
]
