import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import FIG1, fig1  # noqa: E402


@pytest.fixture(scope="session")
def fig1_net():
    return fig1()


@pytest.fixture(scope="session")
def fig1_path():
    return FIG1
