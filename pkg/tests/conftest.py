import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from samc import fixtures, load_model
from samc.adversary import load_policy


@pytest.fixture(scope="session")
def packet():
    return load_model(fixtures.path("packet.sa"))


@pytest.fixture(scope="session")
def packet_shifted():
    return load_model(fixtures.path("packet_shifted.sa"))


@pytest.fixture(scope="session")
def benevolent():
    return load_policy(fixtures.read("benevolent.pol"))
