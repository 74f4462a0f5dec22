"""Smart-ETL for Smart Tourism Tool (STT) catalogs.

Extract STT records from PDF catalogs, remove cross-catalog duplicates,
classify them against the three-domain STT taxonomy through a budgeted
LLM conversation protocol, score classification runs, crosswalk records
to DCTERMS and load them into an Omeka-style collections API.
"""

from importlib import resources

__version__ = "0.1.0"


def data_path(name: str):
    """Path to a bundled data file (taxonomy, vocabularies, prompt templates)."""
    return resources.files("smartetl") / "data" / name
