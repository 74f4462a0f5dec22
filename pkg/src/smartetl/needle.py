"""Needle-in-a-haystack probe for the usable prompt size of a chat endpoint.

The probe plants one out-of-context sentence in a slice of filler text,
asks the model to return it, and escalates the prompt size after every
success until the model fails several times in a row.
"""

from __future__ import annotations

import csv
import json
import logging
import random
import re
from dataclasses import asdict, dataclass, field

from . import data_path
from .errors import BookTooShort, GatewayError, OutOfRange
from .taxonomy.parsing import extract_json_object

log = logging.getLogger(__name__)

OUTCOMES = ("Found", "NotFound", "Wrong", "NonCompliantJSON")
TEXT_SLOT = "###TEXT TO REPLACE###"
DEFAULT_NEEDLE = "The lighthouse keeper painted every staircase bright orange before the winter storms."


def needle_template() -> str:
    with open(data_path("prompts/needle.txt"), encoding="utf-8") as fh:
        return fh.read()


@dataclass
class ProbeConfig:
    haystack: str
    needle: str = DEFAULT_NEEDLE
    start_limit: int = 10_000
    step: int = 500
    max_consecutive_errors: int = 6
    hard_limit: int | None = None
    seed: int = 0
    bucket_width: int = 1_000
    template: str | None = None

    def __post_init__(self):
        if self.start_limit <= len(self.needle):
            raise ValueError("start_limit must exceed the needle length")
        if self.step <= 0 or self.max_consecutive_errors <= 0 or self.bucket_width <= 0:
            raise ValueError("step, max_consecutive_errors and bucket_width must be positive")


@dataclass
class ProbeTrial:
    char_limit: int
    position: int  # offset of the needle in the prompt
    prompt_length: int
    quartile: int
    outcome: str
    response: str
    error: str = ""

    @property
    def is_error(self) -> bool:
        return self.outcome != "Found"


def quartile_of(position: int, length: int) -> int:
    if length <= 0 or not 0 <= position < length:
        raise OutOfRange(f"position {position} outside [0, {length})")
    return min(4 * position // length + 1, 4)


def _boundaries(text: str) -> list[int]:
    return [0] + [m.end() for m in re.finditer(r"\. ", text)]


def build_haystack(book: str, needle: str, limit: int, rng: random.Random,
                   template: str | None = None) -> tuple[str, int]:
    """Prompt of exactly ``limit`` characters and the needle's offset in it."""
    template = template if template is not None else needle_template()
    head, sep, tail = template.partition(TEXT_SLOT)
    if not sep:
        raise ValueError(f"template lacks {TEXT_SLOT}")
    slice_len = limit - len(head) - len(tail) - len(needle) - 1
    if slice_len <= 0:
        raise BookTooShort(f"limit {limit} leaves no room for filler text")
    if len(book) < slice_len:
        raise BookTooShort(f"book has {len(book)} chars, {slice_len} needed")
    starts = [b for b in _boundaries(book) if b + slice_len <= len(book)]
    start = rng.choice(starts) if starts else 0
    chunk = book[start:start + slice_len]
    at = rng.choice(_boundaries(chunk))
    text = chunk[:at] + needle + " " + chunk[at:]
    return head + text + tail, len(head) + at


def _normalize(text: str) -> str:
    return " ".join(text.split()).casefold()


def parse_needle_response(text: str, needle: str) -> str:
    obj = extract_json_object(text or "")
    if obj is None:
        return "NonCompliantJSON"
    value = next((v for k, v in obj.items() if str(k).casefold() == "needle"), None)
    if not isinstance(value, str):
        return "NonCompliantJSON"
    if _normalize(value).strip(" '\"") == "not found":
        return "NotFound"
    if _normalize(needle) in _normalize(value):
        return "Found"
    return "Wrong"


@dataclass
class ProbeReport:
    trials: list
    stop_reason: str
    start_limit: int
    step: int
    bucket_width: int
    quartiles: dict = field(default_factory=dict)  # q -> {trials, errors, error_rate}
    buckets: list = field(default_factory=list)  # {start, end, trials, errors}
    json_compliance_rate: float = 0.0
    max_found_limit: int | None = None

    @property
    def limits(self) -> list[int]:
        return [t.char_limit for t in self.trials]

    def quartile_error_rate(self, q: int) -> float:
        return self.quartiles[q]["error_rate"]

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "start_limit": self.start_limit,
            "step": self.step,
            "max_found_limit": self.max_found_limit,
            "json_compliance_rate": self.json_compliance_rate,
            "quartiles": {str(q): v for q, v in self.quartiles.items()},
            "buckets": self.buckets,
            "trials": [asdict(t) for t in self.trials],
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csvs(self, quartile_path, bucket_path) -> None:
        with open(quartile_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quartile", "trials", "errors", "error_rate"])
            for q in range(1, 5):
                s = self.quartiles[q]
                w.writerow([q, s["trials"], s["errors"], f"{s['error_rate']:.4f}"])
        with open(bucket_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bucket_start", "bucket_end", "trials", "errors"])
            for b in self.buckets:
                w.writerow([b["start"], b["end"], b["trials"], b["errors"]])


def summarize(trials: list, stop_reason: str, config: ProbeConfig) -> ProbeReport:
    quartiles = {}
    for q in range(1, 5):
        qt = [t for t in trials if t.quartile == q]
        errors = sum(t.is_error for t in qt)
        quartiles[q] = {"trials": len(qt), "errors": errors,
                        "error_rate": errors / len(qt) if qt else 0.0}
    buckets = []
    if trials:
        lo = config.start_limit
        hi = max(t.char_limit for t in trials)
        start = lo
        while start <= hi:
            end = start + config.bucket_width
            bt = [t for t in trials if start <= t.char_limit < end]
            buckets.append({"start": start, "end": end, "trials": len(bt),
                            "errors": sum(t.is_error for t in bt)})
            start = end
    compliant = sum(t.outcome != "NonCompliantJSON" for t in trials)
    found = [t.char_limit for t in trials if t.outcome == "Found"]
    return ProbeReport(
        trials, stop_reason, config.start_limit, config.step, config.bucket_width, quartiles, buckets,
        compliant / len(trials) if trials else 0.0, max(found) if found else None,
    )


def run_probe(gateway, config: ProbeConfig) -> ProbeReport:
    """Escalate from ``start_limit`` by ``step`` per success; stop on a run of failures."""
    rng = random.Random(config.seed)
    template = config.template if config.template is not None else needle_template()
    limit, streak, trials = config.start_limit, 0, []
    stop = None
    while stop is None:
        if config.hard_limit is not None and limit > config.hard_limit:
            stop = "HardLimit"
            break
        try:
            prompt, position = build_haystack(config.haystack, config.needle, limit, rng, template)
        except BookTooShort as exc:
            log.warning("haystack exhausted at %d chars: %s", limit, exc)
            stop = "BookExhausted"
            break
        conv = gateway.open(char_budget=None, prompt_cap=1)
        error = ""
        try:
            response = gateway.send(conv, prompt)
            outcome = parse_needle_response(response, config.needle)
        except GatewayError as exc:
            response, outcome, error = "", "NonCompliantJSON", str(exc)
        trials.append(ProbeTrial(limit, position, len(prompt), quartile_of(position, len(prompt)),
                                 outcome, response, error))
        log.info("limit %d: %s", limit, outcome)
        if outcome == "Found":
            streak = 0
            limit += config.step
        else:
            streak += 1
            if streak >= config.max_consecutive_errors:
                stop = "ConsecutiveErrors"
    return summarize(trials, stop, config)


# ------------------------------------------------------------ canned endpoints

def _find(prompt: str, needle: str) -> int:
    return prompt.find(needle)


def always_found(needle: str):
    reply = json.dumps({"Needle": needle})
    return lambda conv, prompt: reply


def always_not_found():
    reply = json.dumps({"Needle": "NOT FOUND"})
    return lambda conv, prompt: reply


def found_in_second_half(needle: str):
    """Finds the needle only when it sits in the second half of the prompt."""
    hit, miss = json.dumps({"Needle": needle}), json.dumps({"Needle": "NOT FOUND"})

    def respond(conv, prompt):
        return hit if 2 * _find(prompt, needle) >= len(prompt) else miss
    return respond
