"""Batched classification conversations."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..errors import BudgetExceeded, ClassificationError, GatewayError
from ..gateway import DEFAULT_CHAR_BUDGET, DEFAULT_PROMPT_CAP, Gateway
from .model import ClassificationResult, Taxonomy
from .parsing import BatchContext, parse_classification_response
from .prompts import build_classification_prompt, build_fewshot_prompts, build_taxonomy_prompt

log = logging.getLogger(__name__)


@dataclass
class ClassifyPolicy:
    mode: str = "shared"  # shared: many STTs per conversation; isolated: one each
    prompt_cap: int = DEFAULT_PROMPT_CAP
    char_budget: int = DEFAULT_CHAR_BUDGET
    workers: int = 1  # isolated mode only

    def __post_init__(self):
        if self.mode not in ("shared", "isolated"):
            raise ValueError(f"unknown mode {self.mode!r}")


def plan_conversations(n_stts: int, overhead: int, prompt_cap: int) -> list[int]:
    """How many STTs each conversation classifies."""
    capacity = prompt_cap - overhead
    if capacity <= 0:
        raise BudgetExceeded(f"{overhead} setup prompts leave no room under a cap of {prompt_cap}")
    sizes = []
    while n_stts > 0:
        sizes.append(min(capacity, n_stts))
        n_stts -= sizes[-1]
    return sizes


def _run_conversation(gateway: Gateway, policy: ClassifyPolicy, setup: list[str], chunk: list,
                      t: Taxonomy) -> list[ClassificationResult]:
    conv = gateway.open(char_budget=policy.char_budget, prompt_cap=policy.prompt_cap)
    try:
        for text in setup:
            gateway.send(conv, text)
    except GatewayError as exc:
        raise ClassificationError(chunk[0].record_id, exc) from exc
    out = []
    for stt in chunk:
        prompt = build_classification_prompt(stt, t, policy.char_budget)
        try:
            reply = gateway.send(conv, prompt)
        except GatewayError as exc:
            raise ClassificationError(stt.record_id, exc) from exc
        out.append(parse_classification_response(reply, t, None, stt.record_id))
    log.info("conversation %s: %d prompts", conv.id, conv.prompt_count)
    return out


def classify_batch(stts, gateway: Gateway, t: Taxonomy, shots=(),
                   policy: ClassifyPolicy | None = None) -> list[ClassificationResult]:
    """Classify ``stts``; each conversation opens with the taxonomy and few-shot prompts."""
    policy = policy or ClassifyPolicy()
    stts = list(stts)
    if not stts:
        return []
    setup = [build_taxonomy_prompt(t, policy.char_budget)]
    setup += build_fewshot_prompts(list(shots), policy.char_budget, t)

    if policy.mode == "shared":
        results, start = [], 0
        for size in plan_conversations(len(stts), len(setup), policy.prompt_cap):
            results += _run_conversation(gateway, policy, setup, stts[start:start + size], t)
            start += size
    else:
        plan_conversations(1, len(setup), policy.prompt_cap)
        if policy.workers > 1:
            with ThreadPoolExecutor(policy.workers) as pool:
                chunks = pool.map(lambda s: _run_conversation(gateway, policy, setup, [s], t), stts)
                results = [r for chunk in chunks for r in chunk]
        else:
            results = [r for s in stts for r in _run_conversation(gateway, policy, setup, [s], t)]

    ctx = BatchContext()
    for r in results:
        ctx.register(r)
    return results
