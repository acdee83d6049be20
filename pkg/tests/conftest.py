from pathlib import Path

import pytest

from newsknn import build_index, load_catalog, load_corpus, load_embeddings
from newsknn.diversity import DiversityContext

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def f1():
    return load_corpus(FIXTURES / "f1_events.csv")


@pytest.fixture(scope="session")
def f1_index(f1):
    return build_index(f1)


@pytest.fixture(scope="session")
def f2():
    return load_embeddings(FIXTURES / "f2_embeddings.tsv")


@pytest.fixture
def ctx(f2):
    return DiversityContext(f2)


@pytest.fixture(scope="session")
def f1_catalog():
    return load_catalog(FIXTURES / "f1_catalog.tsv")
