"""The three prompt kinds of a classification conversation.

1. taxonomy definition (once per conversation),
2. few-shot examples, greedily packed under the character budget,
3. one classification prompt per STT.
"""

from __future__ import annotations

import json

from ..errors import BudgetExceeded, ShotTooLarge
from ..gateway import DEFAULT_CHAR_BUDGET
from ..records import STTRecord
from .model import DOMAINS, PATH_SEP, PLACEHOLDER, Taxonomy

EXAMPLE_MARKER = "###EXAMPLE###"
CLASSIFY_MARKER = "###Classification###"
CONTEXT_ONLY = "This message is only used for context and does not require a response."
SHOT_SEPARATOR = "\n\n"
SELECTION_THRESHOLD = 4


def build_taxonomy_prompt(t: Taxonomy, budget: int = DEFAULT_CHAR_BUDGET) -> str:
    lines = [
        "You will classify Smart Tourism Tools (STTs) with the STT taxonomy below.",
        "The taxonomy has three application domains. Each domain lists its categories;"
        " some categories have subcategories.",
        "",
    ]
    for domain, info in t.domains.items():
        lines.append(f"Domain: {domain}")
        if info["description"]:
            lines.append(f"  {info['description']}")
        for cat in info["categories"]:
            lines.append(f"  - {cat.name}: {cat.description}")
            for child in cat.children:
                c = t.categories[f"{cat.name}{PATH_SEP}{child}"]
                lines.append(f"      - {c.name}: {c.description}")
        lines.append("")
    lines.append("Only the categories listed above exist. " + CONTEXT_ONLY)
    text = "\n".join(lines)
    if len(text) > budget:
        raise BudgetExceeded(f"taxonomy prompt is {len(text)} chars, budget {budget}")
    return text


def stt_json(stt: STTRecord) -> str:
    return json.dumps({"Solution Name": stt.stt_name, "Description": stt.stt_description},
                      ensure_ascii=False, indent=4)


def assemble_justification(t: Taxonomy, paths, fillers) -> str:
    """Repeat each selected category's template, with its placeholder filled in."""
    parts = []
    for p in paths:
        template = t.categories[p].justification
        filler = fillers.get(p, "") if isinstance(fillers, dict) else str(fillers or "")
        marker = PLACEHOLDER if PLACEHOLDER in template else "..."
        parts.append(template.replace(marker, filler or "see description", 1))
    return " ".join(parts)


def render_shot(t: Taxonomy, stt: STTRecord, gold: dict, justification) -> str:
    paths = [p for d in DOMAINS for p in sorted(gold.get(d, ()))]
    # a dict holds per-category fillers; anything else is a single shared filler
    answer = {"Classification": paths, "Justification": assemble_justification(t, paths, justification)}
    return (f"{EXAMPLE_MARKER}\n{stt_json(stt)},\n"
            f"{json.dumps(answer, ensure_ascii=False, indent=4)}\n{CONTEXT_ONLY}")


def pack_texts(texts: list[str], budget: int) -> list[str]:
    """Greedy packing: consecutive texts share a prompt while it stays within budget."""
    prompts: list[str] = []
    current = None
    for text in texts:
        if len(text) > budget:
            raise ShotTooLarge(f"shot of {len(text)} chars exceeds budget {budget}")
        if current is not None and len(current) + len(SHOT_SEPARATOR) + len(text) <= budget:
            current = current + SHOT_SEPARATOR + text
        else:
            if current is not None:
                prompts.append(current)
            current = text
    if current is not None:
        prompts.append(current)
    return prompts


def build_fewshot_prompts(shots, budget: int = DEFAULT_CHAR_BUDGET, taxonomy: Taxonomy | None = None) -> list[str]:
    """``shots``: (STTRecord, gold per-domain sets, justification fillers) triples,
    or pre-rendered shot strings."""
    rendered = []
    for shot in shots:
        if isinstance(shot, str):
            rendered.append(shot)
        else:
            if taxonomy is None:
                raise ValueError("taxonomy required to render structured shots")
            rendered.append(render_shot(taxonomy, *shot))
    return pack_texts(rendered, budget)


def build_classification_prompt(stt: STTRecord, t: Taxonomy | None = None,
                                budget: int = DEFAULT_CHAR_BUDGET) -> str:
    skeleton = json.dumps({d: ["..."] for d in DOMAINS}, ensure_ascii=False, indent=4)
    experts = "; ".join(f"expert {i + 1} covers \"{d}\"" for i, d in enumerate(DOMAINS))
    text = "\n".join([
        CLASSIFY_MARKER,
        "Classify the STT below with the taxonomy.",
        f"Act as three experts, each specialised in one application domain: {experts}.",
        "Each expert scores every category and subcategory of their domain on a scale from"
        " 1 (highly unlikely) to 5 (highly likely), and explains each score.",
        f"Then select the categories with scores of {SELECTION_THRESHOLD} or higher;"
        f" if no category reached {SELECTION_THRESHOLD}, select those with the highest score.",
        "Use only category names that exist in the taxonomy and use the domain names as keys.",
        "Return this JSON object with the selected categories as values:",
        skeleton,
        "STT to classify:",
        stt_json(stt),
    ])
    if len(text) > budget:
        raise BudgetExceeded(f"classification prompt for {stt.record_id} is {len(text)} chars, budget {budget}")
    return text


def select_categories(scores) -> set:
    """Categories scored 4 or more; when none reached 4, every category tied at the top score."""
    scores = list(scores)
    if not scores:
        raise ValueError("no scores")
    chosen = {s.category for s in scores if s.score >= SELECTION_THRESHOLD}
    if chosen:
        return chosen
    top = max(s.score for s in scores)
    return {s.category for s in scores if s.score == top}
