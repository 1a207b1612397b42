import os

import pytest

from lifshitz import disorder as dis
from lifshitz.dynamics import get_family

os.environ.setdefault("LIFSHITZ_THREADS", "1")


@pytest.fixture(scope="session")
def model():
    return get_family("model")


@pytest.fixture(scope="session")
def mu015():
    return dis.uniform(0.15)
