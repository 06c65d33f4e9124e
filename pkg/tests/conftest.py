import pytest

from core.logging import reset_stats
from core.model import figure_adversary, separating_adversary
from services.domain import EnumerationDomain
from tools.adversary_loader import save_adversary


@pytest.fixture(autouse=True)
def clean_stats():
    reset_stats()
    yield


@pytest.fixture
def figure():
    return figure_adversary()


@pytest.fixture
def separating():
    return separating_adversary()


@pytest.fixture
def tiny_domain():
    """n=2, t=1, binary, horizon 2: 13 failure patterns, 52 adversaries"""
    return EnumerationDomain(2, 1)


@pytest.fixture
def small_domain():
    return EnumerationDomain(3, 1)


@pytest.fixture
def adversary_file(tmp_path):
    """Writes an adversary to a JSON file and returns the path"""
    def write(adv, name="adversary.json"):
        path = tmp_path / name
        save_adversary(adv, path)
        return path
    return write
