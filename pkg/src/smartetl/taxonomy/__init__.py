"""STT taxonomy, classification prompts, reply parsing and batch classification."""

from .classify import ClassifyPolicy, classify_batch, plan_conversations
from .model import (
    DOMAINS,
    PATH_SEP,
    VALIDITIES,
    Category,
    ClassificationResult,
    ExpertScore,
    GoldDataset,
    GoldEntry,
    Taxonomy,
    load_taxonomy,
    norm,
    taxonomy_from_dict,
)
from .parsing import BatchContext, extract_json_object, parse_classification_response
from .prompts import (
    build_classification_prompt,
    build_fewshot_prompts,
    build_taxonomy_prompt,
    render_shot,
    select_categories,
)

__all__ = [
    "DOMAINS", "PATH_SEP", "VALIDITIES", "Category", "ClassificationResult", "ExpertScore",
    "GoldDataset", "GoldEntry", "Taxonomy", "load_taxonomy", "norm", "taxonomy_from_dict",
    "BatchContext", "extract_json_object", "parse_classification_response",
    "build_classification_prompt", "build_fewshot_prompts", "build_taxonomy_prompt",
    "render_shot", "select_categories", "ClassifyPolicy", "classify_batch", "plan_conversations",
]
