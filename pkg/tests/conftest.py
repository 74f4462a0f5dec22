from __future__ import annotations

import json
from pathlib import Path

import pytest

from smartetl import data_path
from smartetl.catalog.fixtures import dedup_scenario, generate_eu_catalog, write_fixture_corpus
from smartetl.loader import StubServer
from smartetl.records import STTRecord, Source
from smartetl.taxonomy import GoldDataset, load_taxonomy

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def taxonomy():
    return load_taxonomy()


@pytest.fixture(scope="session")
def scenario():
    return dedup_scenario(0)


@pytest.fixture(scope="session")
def eu_catalog():
    return generate_eu_catalog("EU2023", seed=0)


@pytest.fixture(scope="session")
def gold_a(taxonomy):
    return GoldDataset.load(data_path("gold/A.json"), taxonomy)


@pytest.fixture(scope="session")
def gold_b(taxonomy):
    return GoldDataset.load(data_path("gold/B.json"), taxonomy)


@pytest.fixture(scope="session")
def shots(taxonomy):
    ds = GoldDataset.load(data_path("gold/shots.json"), taxonomy)
    return [(e.record, e.gold, e.justification) for e in ds.entries]


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    paths = write_fixture_corpus(out, seed=0)
    return out, paths


@pytest.fixture(scope="session")
def parser_golden():
    return json.loads((DATA / "parser_golden.json").read_text(encoding="utf-8"))["cases"]


@pytest.fixture
def stub(monkeypatch):
    monkeypatch.setenv("OMEKA_API_KEY", "stub-key")
    with StubServer(api_key="stub-key") as server:
        yield server


def make_record(name="Tool", description="A tool for visitors.", catalog="CAT", page=1, **kw) -> STTRecord:
    return STTRecord(stt_name=name, stt_description=description, source=Source(catalog, page, page), **kw)
