import pytest

from avcurate.assets import default_lexicon, default_lm


@pytest.fixture(scope="session")
def lex():
    return default_lexicon()


@pytest.fixture(scope="session")
def lm():
    return default_lm()
