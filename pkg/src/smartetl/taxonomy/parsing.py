"""Lenient parsing of classification replies.

A reply is valid when it carries a JSON object keyed by the three domain
names whose values name taxonomy categories. Two known slips are repaired
(and noted): a first-level category used as a key, and a parent/child pair
joined into one string. Anything else outside the taxonomy is a
hallucination. A reply that repeats the categorisation of an earlier STT
in the same batch is a repetition.
"""

from __future__ import annotations

import json
import re
from collections import Counter

from .model import DOMAINS, ClassificationResult, ExpertScore, Taxonomy, norm

META_KEYS = {"justification", "justifications", "explanation", "explanations", "scores", "score"}
_DOMAIN_ALIASES = {norm(d): d for d in DOMAINS}
_DOMAIN_ALIASES.update({
    norm("the touristic offer"): DOMAINS[0],
    norm("touristic offer"): DOMAINS[0],
    norm("part of the touristic offer"): DOMAINS[0],
    norm("management"): DOMAINS[2],
    norm("operations"): DOMAINS[2],
})
_COMPOUND_SPLIT = re.compile(r"\s*(?:,|;|:|->|/|\s-\s)\s*")
_FENCE = re.compile(r"```(?:json)?", re.IGNORECASE)


class BatchContext:
    """Remembers the categorisations seen so far in one batch."""

    def __init__(self):
        self.seen: dict = {}  # multiset key -> stt_ref of first occurrence

    @staticmethod
    def key(result: ClassificationResult) -> tuple:
        return tuple(sorted(Counter(result.selected_multiset()).items()))

    def register(self, result: ClassificationResult) -> None:
        if not result.is_valid:
            return
        k = self.key(result)
        if k in self.seen:
            result.validity = "InvalidRepetition"
            result.repairs.append(f"same categorisation as {self.seen[k]}")
        else:
            self.seen[k] = result.stt_ref


def extract_json_object(text: str):
    """First JSON object in ``text`` (code fences tolerated), or None."""
    cleaned = _FENCE.sub("", text)
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", cleaned):
        try:
            obj, _ = decoder.raw_decode(cleaned, m.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _as_items(value):
    """Flatten a domain value into (parent context, string) pairs; None if malformed."""
    if isinstance(value, str):
        return [(None, value)] if value.strip() else []
    if isinstance(value, list):
        out = []
        for v in value:
            if not isinstance(v, str):
                return None
            if v.strip():
                out.append((None, v))
        return out
    if isinstance(value, dict):
        out = []
        for parent, sub in value.items():
            inner = _as_items(sub)
            if inner is None:
                return None
            if inner:
                out.extend((parent, v) for _, v in inner)
            else:
                out.append((None, parent))
        return out
    return None


def _resolve(t: Taxonomy, value: str, domain: str, parent: str | None, repairs: list):
    """Category paths for one reply value, or None if it is not in the taxonomy."""
    parent_name = None
    if parent is not None:
        pc = t.lookup(parent, domain)
        parent_name = t.categories[pc].name if pc else None
    path = t.lookup(value, domain, parent_name)
    if path is not None:
        return [path]
    parts = [p for p in _COMPOUND_SPLIT.split(value) if p.strip()]
    if len(parts) >= 2:
        head = t.lookup(parts[0], domain)
        if head is not None and t.categories[head].children:
            name = t.categories[head].name
            kids = [t.lookup(p, domain, name) for p in parts[1:]]
            if all(k is not None and t.categories[k].parent == name for k in kids):
                repairs.append(f"compound value {value!r} rejoined to {', '.join(kids)}")
                return kids
    return None


def _scores(obj) -> list | None:
    raw = None
    for k, v in obj.items():
        if norm(k) in ("scores", "score"):
            raw = v
    if raw is None:
        return None
    out = []
    try:
        if isinstance(raw, dict):
            for cat, s in raw.items():
                if isinstance(s, dict):
                    out.append(ExpertScore(cat, int(s.get("score")), str(s.get("explanation", ""))))
                else:
                    out.append(ExpertScore(cat, int(s)))
        elif isinstance(raw, list):
            for s in raw:
                out.append(ExpertScore(str(s["category"]), int(s["score"]), str(s.get("explanation", ""))))
        else:
            return None
    except (KeyError, TypeError, ValueError):
        return None
    return out


def _justification(obj) -> str:
    for k, v in obj.items():
        if norm(k) in ("justification", "justifications", "explanation", "explanations"):
            if isinstance(v, str):
                return v
            if isinstance(v, dict):
                return " ".join(f"{a}: {b}" for a, b in v.items())
            if isinstance(v, list):
                return " ".join(str(x) for x in v)
    return ""


def parse_classification_response(text: str, t: Taxonomy, batch_context: BatchContext | None = None,
                                  stt_ref: str = "") -> ClassificationResult:
    def result(validity, selections=None, repairs=(), justification="", scores=None):
        r = ClassificationResult(stt_ref, selections or {d: [] for d in DOMAINS}, validity,
                                 justification, scores, list(repairs), text)
        if batch_context is not None:
            batch_context.register(r)
        return r

    obj = extract_json_object(text or "")
    if obj is None:
        return result("InvalidFormat", repairs=["no JSON object in reply"])

    repairs: list = []
    parents = t.first_level_parents()
    # (domain, parent context, value) triples
    items: list = []
    present: set = set()
    for key, value in obj.items():
        nk = norm(key)
        if nk in META_KEYS:
            continue
        if nk in _DOMAIN_ALIASES:
            domain = _DOMAIN_ALIASES[nk]
            if key != domain:
                repairs.append(f"key {key!r} read as domain {domain!r}")
            parent = None
        elif nk in parents:
            cat = parents[nk]
            domain, parent = cat.domain, cat.name
            repairs.append(f"first-level category key {key!r} remapped to domain {domain!r}")
        else:
            return result("InvalidFormat", repairs=[f"unexpected key {key!r}"])
        flat = _as_items(value)
        if flat is None:
            return result("InvalidFormat", repairs=[f"value of {key!r} is not a list of strings"])
        if isinstance(value, dict):
            repairs.append(f"nested object under {key!r} flattened")
        present.add(domain)
        items.extend((domain, p if p is not None else parent, v) for p, v in flat)

    missing = [d for d in DOMAINS if d not in present]
    if missing:
        return result("InvalidFormat", repairs=repairs + [f"missing domain {d!r}" for d in missing])

    selections = {d: [] for d in DOMAINS}
    unknown = []
    for domain, parent, value in items:
        paths = _resolve(t, value, domain, parent, repairs)
        if paths is None:
            unknown.append(value)
            continue
        for path in paths:
            home = t.domain_of(path)
            if home != domain:
                repairs.append(f"{path!r} listed under {domain!r}, moved to {home!r}")
            if path not in selections[home]:
                selections[home].append(path)

    # a parent listed beside its own subcategory is the split form of one path
    for domain, paths in selections.items():
        for p in list(paths):
            cat = t.categories[p]
            if cat.children and any(t.categories[q].parent == cat.name for q in paths):
                paths.remove(p)
                repairs.append(f"parent entry {p!r} merged into its subcategory")

    justification = _justification(obj)
    scores = _scores(obj)
    if unknown:
        return result("InvalidHallucination", selections,
                      repairs + [f"not in taxonomy: {v!r}" for v in unknown], justification, scores)
    return result("ValidRepaired" if repairs else "Valid", selections, repairs, justification, scores)
