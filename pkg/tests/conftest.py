import pathlib

import pytest

from entprof.model import load_dataset, load_queries, load_schema, load_truth
from entprof.similarity import EmbeddingStore

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def cricket_schema():
    return load_schema(DATA / "cricket" / "schema.txt")


@pytest.fixture()
def cricket_dataset(cricket_schema):
    dataset = load_dataset(DATA / "cricket" / "records.csv", cricket_schema)
    dataset.queries = load_queries(DATA / "cricket" / "queries.csv", cricket_schema)
    dataset.truth = load_truth(DATA / "cricket" / "truth.csv", cricket_schema)
    return dataset


@pytest.fixture(scope="session")
def fixture_store():
    return EmbeddingStore.load(DATA / "embeddings.txt")


@pytest.fixture(scope="session")
def cricket_paths():
    base = DATA / "cricket"
    return {
        "records": base / "records.csv",
        "queries": base / "queries.csv",
        "truth": base / "truth.csv",
        "schema": base / "schema.txt",
        "embeddings": DATA / "embeddings.txt",
    }
