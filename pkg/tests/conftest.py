import pytest

from opmodel import load_lsi


@pytest.fixture(scope="session")
def lsi():
    return load_lsi()


@pytest.fixture(scope="session")
def pres(lsi):
    return lsi.presentation
