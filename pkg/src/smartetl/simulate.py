"""A deterministic stand-in for a chat model, for offline runs.

:class:`KeywordClassifier` answers classification prompts by scoring each
taxonomy category on word overlap with the STT description, then applying
the same selection rule the prompt asks a model for. Setup prompts
(taxonomy, few-shot examples) get a short acknowledgement. It is a
baseline and a test double, not a model of any particular LLM.
"""

from __future__ import annotations

import json
import re

from .gateway import NO_RULE_MATCHED
from .taxonomy.model import DOMAINS, ExpertScore, Taxonomy
from .taxonomy.prompts import CLASSIFY_MARKER, CONTEXT_ONLY, select_categories

ACK = "OK"
_WORD = re.compile(r"[a-z]{4,}")
_STOP = {"that", "with", "from", "their", "they", "this", "used", "uses", "tools", "tool", "while",
         "other", "into", "after", "before", "where", "which", "when", "each", "more", "than", "lets",
         "visitor", "visitors", "tourist", "tourists", "tourism", "service", "services", "platform"}


def _stem(word: str) -> str:
    for suffix in ("ing", "es", "s"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 4:
            return word[: -len(suffix)]
    return word


def _bag(text: str) -> set:
    return {_stem(w) for w in _WORD.findall(text.casefold()) if w not in _STOP}


def _stt_from_prompt(text: str) -> dict | None:
    idx = text.rfind("STT to classify:")
    if idx < 0:
        return None
    try:
        return json.loads(text[idx + len("STT to classify:"):].strip())
    except json.JSONDecodeError:
        return None


class KeywordClassifier:
    def __init__(self, taxonomy: Taxonomy):
        self.taxonomy = taxonomy
        self._bags = {p: _bag(f"{c.name} {c.description}") for p, c in taxonomy.categories.items()
                      if not c.children}

    def scores(self, description: str) -> list[ExpertScore]:
        words = _bag(description)
        out = []
        for path, bag in self._bags.items():
            overlap = len(words & bag)
            out.append(ExpertScore(path, min(5, 1 + overlap), f"{overlap} shared terms"))
        return out

    def classify(self, name: str, description: str) -> dict:
        scores = self.scores(f"{name} {description}")
        answer = {}
        for d in DOMAINS:
            chosen = select_categories([s for s in scores if self.taxonomy.domain_of(s.category) == d])
            answer[d] = sorted(self.taxonomy.categories[p].name for p in chosen)
        answer["Justification"] = "Categories whose descriptions share the most terms with the STT."
        return answer

    def __call__(self, conv, text: str) -> str:
        if CLASSIFY_MARKER in text:
            stt = _stt_from_prompt(text)
            if stt is None:
                return "I could not find the STT in the message."
            return json.dumps(self.classify(stt.get("Solution Name", ""), stt.get("Description", "")),
                              ensure_ascii=False)
        if CONTEXT_ONLY in text:
            return ACK
        return NO_RULE_MATCHED
