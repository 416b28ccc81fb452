import numpy as np
import pytest

from acl_dqn.domain import generate_corpus, generate_kb_rows
from acl_dqn.user_sim import KnowledgeBase


@pytest.fixture(scope="session")
def kb_rows():
    return generate_kb_rows(1)


@pytest.fixture(scope="session")
def kb(kb_rows):
    return KnowledgeBase(kb_rows)


@pytest.fixture(scope="session")
def corpus(kb_rows):
    return generate_corpus(1, kb_rows=kb_rows)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
