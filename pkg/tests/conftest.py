import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import medium_taxonomy, welding_fixture  # noqa: E402


@pytest.fixture
def welding():
    return welding_fixture()


@pytest.fixture(scope="session")
def medium():
    return medium_taxonomy()
