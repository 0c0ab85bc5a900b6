import os
import pytest

from src.data import load_fixture

PRIMES = (29, 37, 41, 53, 61, 73)
FAST_PRIMES = (29, 37)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or bool(int(os.environ.get("RUN_SLOW", 0))):
        return

    skip = pytest.mark.skip(reason="needs --runslow or RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def fixtures():
    """Every committed fixture, parsed once."""
    cache = {}

    def get(p: int):
        if p not in cache:
            cache[p] = load_fixture(p)
        return cache[p]

    return get
