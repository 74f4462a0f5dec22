"""Scoring of classification runs against gold labels.

Per STT and domain, precision/recall/F1 compare the predicted and gold
category sets. Domain figures are means over the valid STTs of a run and
the total F1 is the mean of the three domain F1 values. Invalid replies
(hallucinations, repetitions, format errors) are excluded from every figure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import data_path
from .errors import MissingGold
from .taxonomy.model import DOMAINS, ClassificationResult, GoldDataset

AGGREGATION_NOTE = ("per-STT set precision/recall/F1 averaged over valid STTs per domain; "
                    "total F1 = mean of the domain F1 values")


def set_prf(pred, gold) -> tuple[float, float, float]:
    pred, gold = set(pred), set(gold)
    tp = len(pred & gold)
    if not pred and not gold:
        return 1.0, 1.0, 1.0
    p = tp / len(pred) if pred else 0.0
    r = tp / len(gold) if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


@dataclass
class DomainMetrics:
    domain: str
    precision: float
    recall: float
    f1: float  # mean of per-STT F1, not the harmonic mean of the averaged P and R

    def to_dict(self) -> dict:
        return {"domain": self.domain, "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class EvalReport:
    run_label: str
    dataset_label: str
    domains: list
    total_f1: float
    counted: int
    excluded: list = field(default_factory=list)  # (stt_ref, validity)
    aggregation: str = AGGREGATION_NOTE

    def domain(self, name: str) -> DomainMetrics:
        return next(d for d in self.domains if d.domain == name)

    def to_dict(self) -> dict:
        return {
            "run": self.run_label,
            "dataset": self.dataset_label,
            "aggregation": self.aggregation,
            "total_f1": self.total_f1,
            "counted": self.counted,
            "excluded": [list(e) for e in self.excluded],
            "domains": [d.to_dict() for d in self.domains],
        }

    def table(self) -> str:
        """Plain-text table: run, dataset, total F1 and one row per domain."""
        width = max(len(d) for d in DOMAINS)
        head = f"{'#':<6} {'Dataset':<8} {'Total F1':>8}  {'Domain':<{width}} {'Precision':>9} {'Recall':>7} {'F1':>6}"
        lines = [f"# {self.aggregation}", head, "-" * len(head)]
        for i, d in enumerate(self.domains):
            lead = (f"{self.run_label:<6} {self.dataset_label:<8} {self.total_f1:>8.2f}" if i == 0
                    else " " * 24)
            lines.append(f"{lead}  {d.domain:<{width}} {d.precision:>9.2f} {d.recall:>7.2f} {d.f1:>6.2f}")
        lines.append(f"valid tests: {self.counted}; excluded: {len(self.excluded)}")
        return "\n".join(lines)


def aggregate_run(results, golds: GoldDataset, run_label: str = "", dataset_label: str | None = None) -> EvalReport:
    by_ref = golds.by_ref()
    valid, excluded = [], []
    for r in sorted(results, key=lambda r: r.stt_ref):
        if not r.is_valid:
            excluded.append((r.stt_ref, r.validity))
            continue
        if r.stt_ref not in by_ref:
            raise MissingGold(f"no gold entry for {r.stt_ref!r}")
        valid.append(r)
    domains = []
    for d in DOMAINS:
        scores = [set_prf(r.selections.get(d, ()), by_ref[r.stt_ref].gold.get(d, set())) for r in valid]
        n = len(scores)
        domains.append(DomainMetrics(
            d,
            sum(s[0] for s in scores) / n if n else 0.0,
            sum(s[1] for s in scores) / n if n else 0.0,
            sum(s[2] for s in scores) / n if n else 0.0,
        ))
    total = sum(m.f1 for m in domains) / len(domains)
    return EvalReport(run_label, dataset_label if dataset_label is not None else golds.name,
                      domains, total, len(valid), excluded)


def load_results(path) -> list[ClassificationResult]:
    with open(path, encoding="utf-8") as fh:
        return [ClassificationResult.from_dict(json.loads(line)) for line in fh if line.strip()]


def reference_rows() -> list[dict]:
    """Published per-domain figures of two live models, kept as reference data."""
    with open(data_path("reference_metrics.json"), encoding="utf-8") as fh:
        return json.load(fh)["rows"]


def macro_consistency(row: dict) -> float:
    """|mean of domain F1 - total F1| for one reference row."""
    f1s = [row["domains"][d]["f1"] for d in DOMAINS]
    return abs(sum(f1s) / len(f1s) - row["total_f1"])
