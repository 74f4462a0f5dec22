"""Landline prefix -> producer region lookup (Spanish numbering plan)."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .. import data_path
from ..records import RegionLocation

COUNTRY_CODES = ("+34", "0034")
# Spanish mobile ranges; these numbers say nothing about location
MOBILE_LEADS = ("6", "7")


@dataclass(frozen=True)
class PhonePrefixTable:
    entries: dict  # prefix -> (region_name, latitude, longitude)

    def __post_init__(self):
        for prefix, (name, lat, lon) in self.entries.items():
            if not prefix.isdigit():
                raise ValueError(f"prefix {prefix!r} is not a digit string")
            if abs(lat) > 90 or abs(lon) > 180:
                raise ValueError(f"bad coordinates for prefix {prefix!r}")
        # longest-match must be unambiguous
        for p in self.entries:
            for q in self.entries:
                if p != q and q.startswith(p) and self.entries[p][0] != self.entries[q][0]:
                    raise ValueError(
                        f"prefix {p!r} ({self.entries[p][0]}) shadows {q!r} ({self.entries[q][0]})"
                    )

    @classmethod
    def from_json(cls, obj) -> "PhonePrefixTable":
        entries = obj.get("entries", obj)
        return cls({
            k: (v["region_name"], float(v["latitude"]), float(v["longitude"]))
            if isinstance(v, dict) else (v[0], float(v[1]), float(v[2]))
            for k, v in entries.items()
        })

    @classmethod
    def bundled(cls) -> "PhonePrefixTable":
        return cls.from_json(json.loads(data_path("phone_prefixes.json").read_text("utf-8")))


def national_digits(phone: str) -> str:
    s = phone.strip()
    for cc in COUNTRY_CODES:
        if s.startswith(cc):
            s = s[len(cc):]
            break
    return re.sub(r"\D", "", s)


def resolve_phone_region(phone: str | None, table: PhonePrefixTable) -> RegionLocation | None:
    if not phone:
        return None
    digits = national_digits(phone)
    if not digits or digits.startswith(MOBILE_LEADS):
        return None
    for n in range(len(digits), 0, -1):
        hit = table.entries.get(digits[:n])
        if hit is not None:
            name, lat, lon = hit
            return RegionLocation(name, lat, lon, "PhonePrefix")
    return None
